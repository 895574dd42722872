//! Covariance-based fitness of a source/target mixture and the pixel-balance
//! constraint.
//!
//! For every grid region the candidate's covariance descriptor is compared
//! with the source's and the target's, and the weighted distances are summed.
//! Individuals cache their rendered image, intensity, feature tensor, region
//! statistics and per-region distances so that a localized repaint only
//! recomputes what it touched.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{ConfigError, Error, Result};
use crate::features::{self, pixel_features, FeatureSpec, FeatureTensor, STENCIL_RADIUS};
use crate::raster::{self, Grid, RgbImage};
use crate::region::{init_stats, RegionGrid, RegionStats};
use crate::saliency::WeightMap;
use crate::spd::{self, SpdMatrix, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Euclidean,
    LogEuclidean,
    AffineInvariant,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::LogEuclidean => "logeuclidean",
            Metric::AffineInvariant => "affine",
        }
    }

    /// Distance between two SPD matrices under this metric.
    pub fn distance(self, p: &SpdMatrix, q: &SpdMatrix) -> Result<f64> {
        match self {
            Metric::Euclidean => spd::dist_euclidean(p, q),
            Metric::LogEuclidean => spd::dist_logeuclidean(p, q),
            Metric::AffineInvariant => spd::dist_affineinvariant(p, q),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "logeuclidean" => Ok(Metric::LogEuclidean),
            "affine" => Ok(Metric::AffineInvariant),
            _ => Err(ConfigError::BadValue {
                key: "metric".into(),
                reason: format!("`{s}` is not one of euclidean, logeuclidean, affine"),
            }),
        }
    }
}

/// Which input a pixel is copied from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    S,
    T,
}

impl Source {
    pub fn other(self) -> Source {
        match self {
            Source::S => Source::T,
            Source::T => Source::S,
        }
    }
}

/// Per-pixel provenance flags; the genotype.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PixelMask {
    rows: usize,
    cols: usize,
    flags: Vec<Source>,
}

impl PixelMask {
    pub fn uniform(rows: usize, cols: usize, src: Source) -> Self {
        Self {
            rows,
            cols,
            flags: vec![src; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Source) -> Self {
        let mut flags = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                flags.push(f(i, j));
            }
        }
        Self { rows, cols, flags }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Source {
        self.flags[i * self.cols + j]
    }

    /// Sets a flag and reports whether it changed.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, src: Source) -> bool {
        let slot = &mut self.flags[i * self.cols + j];
        let changed = *slot != src;
        *slot = src;
        changed
    }

    pub fn count(&self, src: Source) -> usize {
        self.flags.iter().filter(|&&f| f == src).count()
    }

    pub fn render(&self, source: &RgbImage, target: &RgbImage) -> RgbImage {
        RgbImage::from_fn(self.rows, self.cols, |i, j| match self.get(i, j) {
            Source::S => source.get(i, j),
            Source::T => target.get(i, j),
        })
        .expect("mask is non-empty")
    }
}

/// A reference descriptor with whatever the metric needs precomputed.
#[derive(Clone, Debug)]
struct Reference {
    descriptor: SpdMatrix,
    /// `log P` for Log-Euclidean, `P^{-1/2}` for affine-invariant.
    prepared: Option<SymMatrix>,
}

/// Everything that stays fixed during a run: inputs, their descriptors,
/// region weights and metric.
#[derive(Clone, Debug)]
pub struct FitnessContext {
    source: RgbImage,
    target: RgbImage,
    same: Vec<bool>,
    grid: RegionGrid,
    spec: FeatureSpec,
    weights: WeightMap,
    metric: Metric,
    refs_s: Vec<Reference>,
    refs_t: Vec<Reference>,
}

impl FitnessContext {
    pub fn new(
        source: RgbImage,
        target: RgbImage,
        spec: FeatureSpec,
        grid: RegionGrid,
        weights: WeightMap,
        metric: Metric,
    ) -> Result<Self> {
        if !source.same_dims(&target) {
            return Err(Error::DimensionMismatch(format!(
                "source {:?} vs target {:?}",
                source.dims(),
                target.dims()
            )));
        }
        if grid.image_dims() != source.dims() {
            return Err(Error::DimensionMismatch(format!(
                "grid built for {:?}, images are {:?}",
                grid.image_dims(),
                source.dims()
            )));
        }
        if weights.w_s.len() != grid.len() || weights.w_t.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} regions",
                weights.len(),
                grid.len()
            )));
        }
        let same = source.pixels().iter().zip(target.pixels()).map(|(a, b)| a == b).collect();
        let refs_s = references(&source, &spec, &grid, metric)?;
        let refs_t = references(&target, &spec, &grid, metric)?;
        Ok(Self {
            source,
            target,
            same,
            grid,
            spec,
            weights,
            metric,
            refs_s,
            refs_t,
        })
    }

    pub fn source(&self) -> &RgbImage {
        &self.source
    }

    pub fn target(&self) -> &RgbImage {
        &self.target
    }

    pub fn image(&self, src: Source) -> &RgbImage {
        match src {
            Source::S => &self.source,
            Source::T => &self.target,
        }
    }

    pub fn grid(&self) -> &RegionGrid {
        &self.grid
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    pub fn weights(&self) -> &WeightMap {
        &self.weights
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dims(&self) -> (usize, usize) {
        self.source.dims()
    }

    /// Regularized descriptor of region `k` of the source or target.
    pub fn descriptor(&self, src: Source, k: usize) -> &SpdMatrix {
        match src {
            Source::S => &self.refs_s[k].descriptor,
            Source::T => &self.refs_t[k].descriptor,
        }
    }

    /// Number of pixels where source and target agree.
    pub fn agreeing_pixels(&self) -> usize {
        self.same.iter().filter(|&&s| s).count()
    }

    /// Distances from `x` to the source and target descriptors of region `k`.
    fn region_distances(&self, k: usize, x: &SpdMatrix) -> Result<(f64, f64)> {
        let (rs, rt) = (&self.refs_s[k], &self.refs_t[k]);
        match self.metric {
            Metric::Euclidean => Ok((
                spd::dist_euclidean(x, &rs.descriptor)?,
                spd::dist_euclidean(x, &rt.descriptor)?,
            )),
            Metric::LogEuclidean => {
                let log_x = spd::spd_log(x)?;
                Ok((
                    spd::dist_euclidean(&log_x, rs.prepared.as_ref().expect("log prepared"))?,
                    spd::dist_euclidean(&log_x, rt.prepared.as_ref().expect("log prepared"))?,
                ))
            }
            Metric::AffineInvariant => Ok((
                spd::affine_invariant_from_inv_sqrt(rs.prepared.as_ref().expect("inverse root prepared"), x)?,
                spd::affine_invariant_from_inv_sqrt(rt.prepared.as_ref().expect("inverse root prepared"), x)?,
            )),
        }
    }
}

fn references(img: &RgbImage, spec: &FeatureSpec, grid: &RegionGrid, metric: Metric) -> Result<Vec<Reference>> {
    let tensor = features::feature_tensor(img, spec)?;
    init_stats(&tensor, grid)?
        .iter()
        .map(|st| {
            let descriptor = st.covariance()?;
            let prepared = match metric {
                Metric::Euclidean => None,
                Metric::LogEuclidean => Some(spd::spd_log(&descriptor)?),
                Metric::AffineInvariant => Some(spd::spd_inv_sqrt(&descriptor)?),
            };
            Ok(Reference { descriptor, prepared })
        })
        .collect()
}

/// A candidate mixture with all caches needed for incremental evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    mask: PixelMask,
    image: RgbImage,
    intensity: Grid,
    tensor: FeatureTensor,
    stats: Vec<RegionStats>,
    dist_s: Vec<f64>,
    dist_t: Vec<f64>,
    fitness: f64,
    count_s: usize,
    count_t: usize,
}

impl Individual {
    /// Builds and fully evaluates the individual with genotype `mask`.
    pub fn from_mask(ctx: &FitnessContext, mask: PixelMask) -> Result<Self> {
        let (m, n) = ctx.dims();
        if (mask.rows, mask.cols) != (m, n) {
            return Err(Error::DimensionMismatch(format!(
                "mask {}x{} vs images {m}x{n}",
                mask.rows, mask.cols
            )));
        }
        let mut ind = Self {
            image: ctx.source.clone(),
            mask,
            intensity: Grid::zeros(m, n),
            tensor: FeatureTensor::zeros(m, n, ctx.spec.len()),
            stats: Vec::new(),
            dist_s: vec![0.0; ctx.grid.len()],
            dist_t: vec![0.0; ctx.grid.len()],
            fitness: 0.0,
            count_s: 0,
            count_t: 0,
        };
        ind.evaluate_full(ctx)?;
        Ok(ind)
    }

    pub fn uniform(ctx: &FitnessContext, src: Source) -> Result<Self> {
        let (m, n) = ctx.dims();
        Self::from_mask(ctx, PixelMask::uniform(m, n, src))
    }

    pub fn mask(&self) -> &PixelMask {
        &self.mask
    }

    pub fn image(&self) -> &RgbImage {
        &self.image
    }

    pub fn tensor(&self) -> &FeatureTensor {
        &self.tensor
    }

    pub fn stats(&self) -> &[RegionStats] {
        &self.stats
    }

    pub fn fitness(&self) -> f64 {
        self.fitness
    }

    pub fn region_distances(&self) -> (&[f64], &[f64]) {
        (&self.dist_s, &self.dist_t)
    }

    /// `c_S`: pixels equal to the source pixel.
    pub fn count_s(&self) -> usize {
        self.count_s
    }

    /// `c_T`: pixels equal to the target pixel.
    pub fn count_t(&self) -> usize {
        self.count_t
    }

    /// `|c_S - c_T|`.
    pub fn constraint_value(&self) -> usize {
        self.count_s.abs_diff(self.count_t)
    }

    /// Amount by which the constraint exceeds `bound`.
    pub fn violation(&self, bound: usize) -> usize {
        self.constraint_value().saturating_sub(bound)
    }

    /// Sets one genotype flag without touching any cache; pass the flipped
    /// pixels to [`Individual::evaluate_incremental`] afterwards.
    #[inline]
    pub fn set_flag(&mut self, i: usize, j: usize, src: Source) -> bool {
        self.mask.set(i, j, src)
    }

    /// Recomputes every cache from the genotype.
    pub fn evaluate_full(&mut self, ctx: &FitnessContext) -> Result<f64> {
        self.image = self.mask.render(&ctx.source, &ctx.target);
        self.intensity = raster::intensity(&self.image);
        if ctx.spec.needs_derivatives() && (self.image.rows() < 3 || self.image.cols() < 3) {
            return Err(Error::DimensionTooSmall {
                rows: self.image.rows(),
                cols: self.image.cols(),
            });
        }
        self.tensor = features::feature_tensor_with_intensity(&self.image, &self.intensity, &ctx.spec);
        let (mut cs, mut ct) = (0, 0);
        for (k, &same) in ctx.same.iter().enumerate() {
            match (same, self.mask.flags[k]) {
                (true, _) => {
                    cs += 1;
                    ct += 1;
                }
                (false, Source::S) => cs += 1,
                (false, Source::T) => ct += 1,
            }
        }
        self.count_s = cs;
        self.count_t = ct;
        self.rebuild_stats(ctx)
    }

    /// Rebuilds the region sums from the cached tensor, discarding any
    /// accumulated floating-point drift.
    pub fn rebuild_stats(&mut self, ctx: &FitnessContext) -> Result<f64> {
        self.stats = init_stats(&self.tensor, &ctx.grid)?;
        for k in 0..ctx.grid.len() {
            self.update_region(ctx, k)?;
        }
        self.fitness = self.sum_terms(ctx);
        Ok(self.fitness)
    }

    fn update_region(&mut self, ctx: &FitnessContext, k: usize) -> Result<()> {
        let cov = self.stats[k].covariance()?;
        let (ds, dt) = ctx.region_distances(k, &cov)?;
        self.dist_s[k] = ds;
        self.dist_t[k] = dt;
        Ok(())
    }

    fn sum_terms(&self, ctx: &FitnessContext) -> f64 {
        let w = &ctx.weights;
        (0..self.dist_s.len())
            .map(|k| w.w_s[k] * self.dist_s[k] + w.w_t[k] * self.dist_t[k])
            .sum()
    }

    /// Brings the caches up to date after the flags at `changed` were
    /// flipped with [`Individual::set_flag`].
    pub fn evaluate_incremental(&mut self, ctx: &FitnessContext, changed: &[(usize, usize)]) -> Result<f64> {
        let (m, n) = ctx.dims();
        let mut touched = Vec::with_capacity(changed.len());
        for &(i, j) in changed {
            let k = i * n + j;
            let src = self.mask.get(i, j);
            if !ctx.same[k] {
                match src {
                    Source::S => {
                        self.count_s += 1;
                        self.count_t -= 1;
                    }
                    Source::T => {
                        self.count_t += 1;
                        self.count_s -= 1;
                    }
                }
            }
            let value = ctx.image(src).get(i, j);
            if self.image.get(i, j) != value {
                self.image.set(i, j, value);
                self.intensity.set(i, j, raster::pixel_intensity(value));
                touched.push((i, j));
            }
        }
        if touched.is_empty() {
            return Ok(self.fitness);
        }

        let mut queued = vec![false; m * n];
        let mut window = Vec::new();
        let r = STENCIL_RADIUS;
        for &(i, j) in &touched {
            for a in i.saturating_sub(r)..(i + r + 1).min(m) {
                for b in j.saturating_sub(r)..(j + r + 1).min(n) {
                    if !queued[a * n + b] {
                        queued[a * n + b] = true;
                        window.push((a, b));
                    }
                }
            }
        }

        let p = ctx.spec.len();
        let mut fresh = vec![0.0; p];
        let mut dirty = vec![false; ctx.grid.len()];
        for (i, j) in window {
            pixel_features(&self.image, &self.intensity, &ctx.spec, i, j, &mut fresh);
            let old = self.tensor.pixel(i, j);
            if old == &fresh[..] {
                continue;
            }
            if let Some((ps, qs)) = ctx.grid.covering(i, j) {
                let cols = ctx.grid.counts().1;
                for pp in ps {
                    for qq in qs.clone() {
                        let k = pp * cols + qq;
                        self.stats[k].replace(old, &fresh);
                        dirty[k] = true;
                    }
                }
            }
            self.tensor.pixel_mut(i, j).copy_from_slice(&fresh);
        }
        for (k, _) in dirty.iter().enumerate().filter(|(_, &d)| d) {
            self.update_region(ctx, k)?;
        }
        self.fitness = self.sum_terms(ctx);
        Ok(self.fitness)
    }
}

/// Lexicographic order on `(constraint violation, fitness)`; smaller is better.
pub fn lex_compare(a: &Individual, b: &Individual, bound: usize) -> Ordering {
    a.violation(bound)
        .cmp(&b.violation(bound))
        .then_with(|| a.fitness.total_cmp(&b.fitness))
}
