//! Image-signature saliency and per-region weight maps.
//!
//! Each colour channel is mean-centred, transformed with an orthonormal
//! type-II DCT, reduced to the sign of its spectrum (DC dropped), and
//! transformed back. The squared reconstructions are summed over channels,
//! blurred with a Gaussian and scaled to a maximum of 1.

use std::path::Path;

use crate::error::{ConfigError, Error, Result};
use crate::raster::{Grid, RgbImage};
use crate::region::RegionGrid;

pub const DEFAULT_SIGMA_FRAC: f64 = 0.04;

/// Per-pixel attention map with values in `[0, 1]` and maximum 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    grid: Grid,
}

impl SaliencyMap {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.grid.rows()
    }

    pub fn cols(&self) -> usize {
        self.grid.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.grid.get(i, j)
    }

    /// Wraps an arbitrary grid of values in `[0, 1]`; used for hand-built maps.
    pub fn from_grid(grid: Grid) -> Result<Self> {
        if grid.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::WeightOutOfRange(
                grid.data().iter().copied().find(|v| !(0.0..=1.0).contains(v)).unwrap(),
            ));
        }
        Ok(Self { grid })
    }

    pub fn to_image(&self) -> RgbImage {
        RgbImage::from_fn(self.rows(), self.cols(), |i, j| {
            let v = (self.get(i, j) * 255.0).round().clamp(0.0, 255.0) as u8;
            [v, v, v]
        })
        .expect("saliency map is non-empty")
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_image().save_png(path)
    }
}

/// Orthonormal DCT-II basis, `basis[k * n + x] = a_k cos(pi (2x + 1) k / 2n)`.
fn dct_basis(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    let nf = n as f64;
    for k in 0..n {
        let a = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for x in 0..n {
            c[k * n + x] = a * (std::f64::consts::PI * (2 * x + 1) as f64 * k as f64 / (2.0 * nf)).cos();
        }
    }
    c
}

/// Separable 2-D transform of a row-major `rows x cols` array:
/// `R D C^T` forward, `R^T D C` when `inverse`.
fn sandwich(data: &[f64], rows: usize, cols: usize, row_basis: &[f64], col_basis: &[f64], inverse: bool) -> Vec<f64> {
    // along columns (within each row) first
    let mut tmp = vec![0.0; rows * cols];
    for i in 0..rows {
        let src = &data[i * cols..(i + 1) * cols];
        for k in 0..cols {
            let mut acc = 0.0;
            for x in 0..cols {
                let c = if inverse { col_basis[x * cols + k] } else { col_basis[k * cols + x] };
                acc += c * src[x];
            }
            tmp[i * cols + k] = acc;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for k in 0..rows {
        for x in 0..rows {
            let c = if inverse { row_basis[x * rows + k] } else { row_basis[k * rows + x] };
            if c == 0.0 {
                continue;
            }
            let src = &tmp[x * cols..(x + 1) * cols];
            let dst = &mut out[k * cols..(k + 1) * cols];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
    }
    out
}

fn gaussian_blur(data: &[f64], rows: usize, cols: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let kernel: Vec<f64> = (-radius..=radius).map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / norm).collect();

    let clamp = |x: isize, n: usize| x.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                acc += w * data[i * cols + clamp(j as isize + t as isize - radius, cols)];
            }
            tmp[i * cols + j] = acc;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                acc += w * tmp[clamp(i as isize + t as isize - radius, rows) * cols + j];
            }
            out[i * cols + j] = acc;
        }
    }
    out
}

/// Saliency of an image given as real-valued channels of equal shape.
pub fn signature_saliency_channels(channels: &[Grid], sigma_frac: f64) -> Result<SaliencyMap> {
    if !(sigma_frac > 0.0 && sigma_frac < 0.5) {
        return Err(ConfigError::BadValue {
            key: "sigma_frac".into(),
            reason: format!("{sigma_frac} not in (0, 0.5)"),
        }
        .into());
    }
    let first = channels
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no channels".into()))?;
    let (rows, cols) = (first.rows(), first.cols());
    if channels.iter().any(|c| c.rows() != rows || c.cols() != cols) {
        return Err(Error::DimensionMismatch("channel shapes differ".into()));
    }
    let row_basis = dct_basis(rows);
    let col_basis = dct_basis(cols);

    let mut energy = vec![0.0; rows * cols];
    for ch in channels {
        let mean = ch.data().iter().sum::<f64>() / ch.data().len() as f64;
        let centred: Vec<f64> = ch.data().iter().map(|v| v - mean).collect();
        let mut spectrum = sandwich(&centred, rows, cols, &row_basis, &col_basis, false);
        let peak = spectrum.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let floor = 1e-12 * peak;
        spectrum[0] = 0.0;
        for v in spectrum.iter_mut() {
            *v = if v.abs() <= floor { 0.0 } else { v.signum() };
        }
        let recon = sandwich(&spectrum, rows, cols, &row_basis, &col_basis, true);
        for (e, r) in energy.iter_mut().zip(recon) {
            *e += r * r;
        }
    }
    if energy.iter().all(|&e| e == 0.0) {
        return Err(Error::DegenerateImage);
    }
    let sigma = sigma_frac * rows.min(cols) as f64;
    let blurred = gaussian_blur(&energy, rows, cols, sigma);
    let max = blurred.iter().copied().fold(0.0f64, f64::max);
    if !(max > 0.0) {
        return Err(Error::DegenerateImage);
    }
    Ok(SaliencyMap {
        grid: Grid::from_fn(rows, cols, |i, j| (blurred[i * cols + j] / max).clamp(0.0, 1.0)),
    })
}

pub fn image_signature_saliency(img: &RgbImage, sigma_frac: f64) -> Result<SaliencyMap> {
    let channels: Vec<Grid> = (0..3)
        .map(|c| Grid::from_fn(img.rows(), img.cols(), |i, j| img.get(i, j)[c] as f64))
        .collect();
    signature_saliency_channels(&channels, sigma_frac)
}

/// Per-region weights for the source (`w_s`) and target (`w_t`) terms.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    pub w_s: Vec<f64>,
    pub w_t: Vec<f64>,
}

impl WeightMap {
    pub fn len(&self) -> usize {
        self.w_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_s.is_empty()
    }
}

fn check_weight(w: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&w) {
        Ok(w)
    } else {
        Err(Error::WeightOutOfRange(w))
    }
}

pub fn uniform_weights(grid: &RegionGrid, w_s: f64, w_t: f64) -> Result<WeightMap> {
    let (w_s, w_t) = (check_weight(w_s)?, check_weight(w_t)?);
    Ok(WeightMap {
        w_s: vec![w_s; grid.len()],
        w_t: vec![w_t; grid.len()],
    })
}

fn region_means(grid: &RegionGrid, map: &SaliencyMap) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            let (rows, cols) = grid.bounds(k);
            let mut acc = 0.0;
            for i in rows {
                for j in cols.clone() {
                    acc += map.get(i, j);
                }
            }
            (acc / grid.region_size() as f64).clamp(0.0, 1.0)
        })
        .collect()
}

/// Region weights as the mean saliency over each region.
pub fn saliency_weights(grid: &RegionGrid, sal_s: &SaliencyMap, sal_t: &SaliencyMap) -> Result<WeightMap> {
    for map in [sal_s, sal_t] {
        if (map.rows(), map.cols()) != grid.image_dims() {
            return Err(Error::DimensionMismatch(format!(
                "saliency map {}x{} vs image {:?}",
                map.rows(),
                map.cols(),
                grid.image_dims()
            )));
        }
    }
    Ok(WeightMap {
        w_s: region_means(grid, sal_s),
        w_t: region_means(grid, sal_t),
    })
}
