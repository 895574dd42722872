//! Half-overlapping square region grid and per-region covariance statistics.
//!
//! Regions have half-width `l` and centres spaced `l` apart, so neighbouring
//! regions overlap by half. Statistics are kept as running sums of the
//! feature vectors and their outer products, taken relative to a fixed
//! per-region reference vector, so localized pixel changes update them in
//! `O(p^2)` per affected region.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::spd::{regularize, SpdMatrix, SymMatrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionGrid {
    half_width: usize,
    rows: usize,
    cols: usize,
    /// Number of centres along the row and column axes.
    count_rows: usize,
    count_cols: usize,
}

impl RegionGrid {
    /// Centres sit at `(l + 1) + k l` (1-based) along each axis. Only centres
    /// whose square lies fully inside the image are kept.
    pub fn new(rows: usize, cols: usize, half_width: usize) -> Result<Self> {
        let l = half_width;
        if l == 0 || rows < 2 * l + 1 || cols < 2 * l + 1 {
            return Err(Error::ImageTooSmall {
                rows,
                cols,
                half_width,
            });
        }
        Ok(Self {
            half_width,
            rows,
            cols,
            count_rows: (rows - 1 - l) / l,
            count_cols: (cols - 1 - l) / l,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn image_dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Region counts along the row and column axes.
    pub fn counts(&self) -> (usize, usize) {
        (self.count_rows, self.count_cols)
    }

    pub fn len(&self) -> usize {
        self.count_rows * self.count_cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixels per region, `(2l + 1)^2`.
    pub fn region_size(&self) -> usize {
        (2 * self.half_width + 1).pow(2)
    }

    /// 1-based centre `(c, d)` of region `k`.
    pub fn center(&self, k: usize) -> (usize, usize) {
        let (p, q) = (k / self.count_cols, k % self.count_cols);
        let l = self.half_width;
        ((l + 1) + p * l, (l + 1) + q * l)
    }

    pub fn centers(&self) -> Vec<(usize, usize)> {
        (0..self.len()).map(|k| self.center(k)).collect()
    }

    /// 0-based inclusive pixel ranges `(rows, cols)` covered by region `k`.
    pub fn bounds(&self, k: usize) -> (RangeInclusive<usize>, RangeInclusive<usize>) {
        let (p, q) = (k / self.count_cols, k % self.count_cols);
        let l = self.half_width;
        (p * l..=p * l + 2 * l, q * l..=q * l + 2 * l)
    }

    /// Index of the region with 1-based centre `(c, d)`, if it is on the grid.
    pub fn index_of(&self, center: (usize, usize)) -> Option<usize> {
        let l = self.half_width;
        let (c, d) = center;
        if c < l + 1 || d < l + 1 || !(c - l - 1).is_multiple_of(l) || !(d - l - 1).is_multiple_of(l) {
            return None;
        }
        let (p, q) = ((c - l - 1) / l, (d - l - 1) / l);
        (p < self.count_rows && q < self.count_cols).then(|| p * self.count_cols + q)
    }

    fn axis_span(&self, x: usize, count: usize) -> Option<RangeInclusive<usize>> {
        let l = self.half_width;
        let hi = (x / l).min(count.checked_sub(1)?);
        let lo = if x >= 2 * l { (x - 2 * l).div_ceil(l) } else { 0 };
        (lo <= hi).then_some(lo..=hi)
    }

    /// Grid coordinates `(p, q)` of the regions covering pixel `(i, j)` (0-based).
    pub(crate) fn covering(&self, i: usize, j: usize) -> Option<(RangeInclusive<usize>, RangeInclusive<usize>)> {
        Some((self.axis_span(i, self.count_rows)?, self.axis_span(j, self.count_cols)?))
    }

    /// Indices of all regions containing pixel `(i, j)` (0-based), ascending.
    pub fn regions_containing(&self, i: usize, j: usize) -> Vec<usize> {
        match self.covering(i, j) {
            Some((ps, qs)) => ps
                .flat_map(|p| qs.clone().map(move |q| (p, q)))
                .map(|(p, q)| p * self.count_cols + q)
                .collect(),
            None => Vec::new(),
        }
    }
}

pub fn build_grid(rows: usize, cols: usize, half_width: usize) -> Result<RegionGrid> {
    RegionGrid::new(rows, cols, half_width)
}

#[inline]
fn packed(p: usize, a: usize, b: usize) -> usize {
    // upper triangle, row-major, a <= b
    a * p - a * (a + 1) / 2 + b
}

/// Running sums over one region, relative to `reference`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionStats {
    count: usize,
    reference: Vec<f64>,
    sum: Vec<f64>,
    outer: Vec<f64>,
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.carry
    }
}

impl RegionStats {
    /// Accumulates the features of every pixel in `rows x cols`.
    pub fn from_window(
        tensor: &FeatureTensor,
        rows: RangeInclusive<usize>,
        cols: RangeInclusive<usize>,
        reference: Vec<f64>,
    ) -> Self {
        let p = tensor.dim();
        let mut sum = vec![Compensated::default(); p];
        let mut outer = vec![Compensated::default(); p * (p + 1) / 2];
        let mut shifted = vec![0.0; p];
        let mut count = 0;
        for i in rows {
            for j in cols.clone() {
                for (s, (v, r)) in shifted.iter_mut().zip(tensor.pixel(i, j).iter().zip(&reference)) {
                    *s = v - r;
                }
                for a in 0..p {
                    sum[a].add(shifted[a]);
                    for b in a..p {
                        outer[packed(p, a, b)].add(shifted[a] * shifted[b]);
                    }
                }
                count += 1;
            }
        }
        Self {
            count,
            reference,
            sum: sum.into_iter().map(Compensated::value).collect(),
            outer: outer.into_iter().map(Compensated::value).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    /// Sum of the feature vectors over the region.
    pub fn sum_vector(&self) -> Vec<f64> {
        self.sum
            .iter()
            .zip(&self.reference)
            .map(|(s, r)| s + self.count as f64 * r)
            .collect()
    }

    /// Mean feature vector.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum.iter().zip(&self.reference).map(|(s, r)| r + s / n).collect()
    }

    /// Replaces one pixel's contribution `old` by `new`.
    #[inline]
    pub fn replace(&mut self, old: &[f64], new: &[f64]) {
        let p = self.sum.len();
        let mut k = 0;
        for a in 0..p {
            let na = new[a] - self.reference[a];
            let oa = old[a] - self.reference[a];
            self.sum[a] += na - oa;
            for b in a..p {
                let nb = new[b] - self.reference[b];
                let ob = old[b] - self.reference[b];
                self.outer[k] += na * nb - oa * ob;
                k += 1;
            }
        }
    }

    /// Unbiased sample covariance `(sum phi phi^T - n mu mu^T) / (n - 1)`,
    /// before regularization.
    pub fn raw_covariance(&self) -> SymMatrix {
        let p = self.sum.len();
        let n = self.count as f64;
        let mut m = DMatrix::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let v = (self.outer[packed(p, a, b)] - self.sum[a] * self.sum[b] / n) / (n - 1.0);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        SymMatrix::symmetrised(m)
    }

    pub fn covariance(&self) -> Result<SpdMatrix> {
        regularize(&self.raw_covariance())
    }
}

fn stats_for_region(tensor: &FeatureTensor, grid: &RegionGrid, k: usize) -> RegionStats {
    let (c, d) = grid.center(k);
    let (rows, cols) = grid.bounds(k);
    RegionStats::from_window(tensor, rows, cols, tensor.pixel(c - 1, d - 1).to_vec())
}

fn check_tensor(tensor: &FeatureTensor, grid: &RegionGrid) -> Result<()> {
    if (tensor.rows(), tensor.cols()) != grid.image_dims() {
        return Err(Error::DimensionMismatch(format!(
            "tensor {}x{} vs grid built for {}x{}",
            tensor.rows(),
            tensor.cols(),
            grid.rows,
            grid.cols
        )));
    }
    Ok(())
}

/// Regularized covariance of the region centred at 1-based `center` with
/// half-width `half_width`.
pub fn region_covariance(tensor: &FeatureTensor, center: (usize, usize), half_width: usize) -> Result<SpdMatrix> {
    regularize(&raw_region_covariance(tensor, center, half_width)?)
}

/// As [`region_covariance`] but without regularization.
pub fn raw_region_covariance(tensor: &FeatureTensor, center: (usize, usize), half_width: usize) -> Result<SymMatrix> {
    let (c, d) = center;
    let l = half_width;
    if c < l + 1 || d < l + 1 || c + l > tensor.rows() || d + l > tensor.cols() {
        return Err(Error::ImageTooSmall {
            rows: tensor.rows(),
            cols: tensor.cols(),
            half_width,
        });
    }
    let (ci, dj) = (c - 1, d - 1);
    let stats = RegionStats::from_window(tensor, ci - l..=ci + l, dj - l..=dj + l, tensor.pixel(ci, dj).to_vec());
    Ok(stats.raw_covariance())
}

pub fn init_stats(tensor: &FeatureTensor, grid: &RegionGrid) -> Result<Vec<RegionStats>> {
    check_tensor(tensor, grid)?;
    Ok((0..grid.len()).map(|k| stats_for_region(tensor, grid, k)).collect())
}

/// A pixel whose feature vector changed from `old` to `new`.
#[derive(Clone, Copy, Debug)]
pub struct PixelDelta<'a> {
    pub row: usize,
    pub col: usize,
    pub old: &'a [f64],
    pub new: &'a [f64],
}

/// Applies feature changes to every region containing the changed pixels and
/// returns the ascending indices of the regions touched.
pub fn apply_pixel_deltas(stats: &mut [RegionStats], grid: &RegionGrid, deltas: &[PixelDelta<'_>]) -> Vec<usize> {
    let mut dirty = vec![false; grid.len()];
    for d in deltas {
        if let Some((ps, qs)) = grid.covering(d.row, d.col) {
            for p in ps {
                for q in qs.clone() {
                    let k = p * grid.count_cols + q;
                    stats[k].replace(d.old, d.new);
                    dirty[k] = true;
                }
            }
        }
    }
    dirty.iter().enumerate().filter_map(|(k, &x)| x.then_some(k)).collect()
}
