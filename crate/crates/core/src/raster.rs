//! RGB rasters, intensity, finite-difference derivatives and colour conversion.
//!
//! Pixel indices are 0-based `(row, col)` throughout the API. Derivative
//! stencils use replicate padding, implemented by clamping neighbour indices
//! into the image.

use std::path::Path;

use crate::error::{Error, Result};

/// Luma weights applied to R, G and B.
pub const LUMA: [f64; 3] = [0.2989, 0.5870, 0.1140];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RgbImage {
    rows: usize,
    cols: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "image must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if pixels.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels supplied for a {rows}x{cols} image",
                pixels.len()
            )));
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn filled(rows: usize, cols: usize, value: [u8; 3]) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                pixels.push(f(i, j));
            }
        }
        Self::new(rows, cols, pixels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [u8; 3] {
        self.pixels[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: [u8; 3]) {
        self.pixels[i * self.cols + j] = value;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn same_dims(&self, other: &RgbImage) -> bool {
        self.dims() == other.dims()
    }

    /// Loads an 8-bit RGB image; any alpha channel is dropped.
    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        let pixels = rgb.pixels().map(|p| p.0).collect();
        Self::new(h as usize, w as usize, pixels)
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut buf = image::RgbImage::new(self.cols as u32, self.rows as u32);
        for (dst, src) in buf.pixels_mut().zip(&self.pixels) {
            dst.0 = *src;
        }
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })
    }
}

/// Loads two images that must share dimensions.
pub fn load_pair(source: &Path, target: &Path) -> Result<(RgbImage, RgbImage)> {
    let s = RgbImage::load_png(source)?;
    let t = RgbImage::load_png(target)?;
    if !s.same_dims(&t) {
        return Err(Error::DimensionMismatch(format!(
            "{} is {}x{} but {} is {}x{}",
            source.display(),
            s.rows,
            s.cols,
            target.display(),
            t.rows,
            t.cols
        )));
    }
    Ok((s, t))
}

/// Row-major real-valued grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value, first occurrence wins.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.data.iter().enumerate() {
            if *v > self.data[best] {
                best = k;
            }
        }
        (best / self.cols, best % self.cols)
    }

    #[inline]
    fn clamped(&self, i: isize, j: isize) -> f64 {
        let i = i.clamp(0, self.rows as isize - 1) as usize;
        let j = j.clamp(0, self.cols as isize - 1) as usize;
        self.get(i, j)
    }
}

#[inline]
pub fn pixel_intensity(px: [u8; 3]) -> f64 {
    LUMA[0] * px[0] as f64 + LUMA[1] * px[1] as f64 + LUMA[2] * px[2] as f64
}

pub fn intensity(img: &RgbImage) -> Grid {
    Grid {
        rows: img.rows,
        cols: img.cols,
        data: img.pixels.iter().map(|&p| pixel_intensity(p)).collect(),
    }
}

// Pointwise stencils. Every grid operation and every incremental update goes
// through these so results agree bit for bit.

#[inline]
pub(crate) fn d_i(g: &Grid, i: usize, j: usize) -> f64 {
    let (i, j) = (i as isize, j as isize);
    0.5 * (g.clamped(i + 1, j) - g.clamped(i - 1, j))
}

#[inline]
pub(crate) fn d_j(g: &Grid, i: usize, j: usize) -> f64 {
    let (i, j) = (i as isize, j as isize);
    0.5 * (g.clamped(i, j + 1) - g.clamped(i, j - 1))
}

#[inline]
pub(crate) fn d_ii(g: &Grid, i: usize, j: usize) -> f64 {
    let (i, j) = (i as isize, j as isize);
    g.clamped(i + 1, j) - 2.0 * g.clamped(i, j) + g.clamped(i - 1, j)
}

#[inline]
pub(crate) fn d_jj(g: &Grid, i: usize, j: usize) -> f64 {
    let (i, j) = (i as isize, j as isize);
    g.clamped(i, j + 1) - 2.0 * g.clamped(i, j) + g.clamped(i, j - 1)
}

/// Mixed derivative: the column stencil applied to the (padded) row derivative.
#[inline]
pub(crate) fn d_ij(g: &Grid, i: usize, j: usize) -> f64 {
    let last = g.cols - 1;
    let right = (j + 1).min(last);
    let left = j.saturating_sub(1);
    0.5 * (d_i(g, i, right) - d_i(g, i, left))
}

#[derive(Clone, Debug)]
pub struct Derivatives {
    pub di: Grid,
    pub dj: Grid,
    pub dii: Grid,
    pub djj: Grid,
    pub dij: Grid,
}

pub fn derivatives(intensity: &Grid) -> Result<Derivatives> {
    let (m, n) = (intensity.rows, intensity.cols);
    if m < 3 || n < 3 {
        return Err(Error::DimensionTooSmall { rows: m, cols: n });
    }
    Ok(Derivatives {
        di: Grid::from_fn(m, n, |i, j| d_i(intensity, i, j)),
        dj: Grid::from_fn(m, n, |i, j| d_j(intensity, i, j)),
        dii: Grid::from_fn(m, n, |i, j| d_ii(intensity, i, j)),
        djj: Grid::from_fn(m, n, |i, j| d_jj(intensity, i, j)),
        dij: Grid::from_fn(m, n, |i, j| d_ij(intensity, i, j)),
    })
}

/// Edge magnitude and orientation in `[0, pi/2]`; a zero gradient has orientation 0.
#[inline]
pub fn edge_response(di: f64, dj: f64) -> (f64, f64) {
    (di.hypot(dj), di.abs().atan2(dj.abs()))
}

pub fn edge_features(di: &Grid, dj: &Grid) -> Result<(Grid, Grid)> {
    if di.rows != dj.rows || di.cols != dj.cols {
        return Err(Error::DimensionMismatch(format!(
            "gradient grids {}x{} and {}x{}",
            di.rows, di.cols, dj.rows, dj.cols
        )));
    }
    let mut mag = Grid::zeros(di.rows, di.cols);
    let mut orient = Grid::zeros(di.rows, di.cols);
    for k in 0..di.data.len() {
        let (a, o) = edge_response(di.data[k], dj.data[k]);
        mag.data[k] = a;
        orient.data[k] = o;
    }
    Ok((mag, orient))
}

/// Hexcone RGB to HSV with every component scaled to `[0, 255]`.
/// Greys get hue and saturation 0.
#[inline]
pub fn pixel_hsv(px: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = px.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let sat = if max > 0.0 { delta / max } else { 0.0 };
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    [hue * 255.0, sat * 255.0, max * 255.0]
}

pub fn rgb_to_hsv(img: &RgbImage) -> (Grid, Grid, Grid) {
    let mut h = Grid::zeros(img.rows, img.cols);
    let mut s = Grid::zeros(img.rows, img.cols);
    let mut v = Grid::zeros(img.rows, img.cols);
    for (k, &px) in img.pixels.iter().enumerate() {
        let [a, b, c] = pixel_hsv(px);
        h.data[k] = a;
        s.data[k] = b;
        v.data[k] = c;
    }
    (h, s, v)
}
