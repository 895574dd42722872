//! Per-pixel feature vectors and their stacking into a feature tensor.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::raster::{self, Grid, RgbImage};

/// How far a pixel change can reach into neighbouring feature values.
pub const STENCIL_RADIUS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Feature {
    /// Row coordinate, 1-based.
    Row,
    /// Column coordinate, 1-based.
    Col,
    Red,
    Green,
    Blue,
    AbsDi,
    AbsDj,
    AbsDii,
    AbsDjj,
    AbsDij,
    EdgeMagnitude,
    EdgeOrientation,
    Hue,
    Saturation,
    Value,
}

impl Feature {
    pub const ALL: [Feature; 15] = [
        Feature::Row,
        Feature::Col,
        Feature::Red,
        Feature::Green,
        Feature::Blue,
        Feature::AbsDi,
        Feature::AbsDj,
        Feature::AbsDii,
        Feature::AbsDjj,
        Feature::AbsDij,
        Feature::EdgeMagnitude,
        Feature::EdgeOrientation,
        Feature::Hue,
        Feature::Saturation,
        Feature::Value,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Row => "i",
            Feature::Col => "j",
            Feature::Red => "r",
            Feature::Green => "g",
            Feature::Blue => "b",
            Feature::AbsDi => "di",
            Feature::AbsDj => "dj",
            Feature::AbsDii => "dii",
            Feature::AbsDjj => "djj",
            Feature::AbsDij => "dij",
            Feature::EdgeMagnitude => "edge_mag",
            Feature::EdgeOrientation => "edge_orient",
            Feature::Hue => "h",
            Feature::Saturation => "s",
            Feature::Value => "v",
        }
    }

    fn uses_derivatives(self) -> bool {
        matches!(
            self,
            Feature::AbsDi
                | Feature::AbsDj
                | Feature::AbsDii
                | Feature::AbsDjj
                | Feature::AbsDij
                | Feature::EdgeMagnitude
                | Feature::EdgeOrientation
        )
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidFeatureSpec(format!("unknown feature `{s}`")))
    }
}

/// Ordered, duplicate-free list of at least two features.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSpec {
    features: Vec<Feature>,
}

impl FeatureSpec {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        if features.len() < 2 {
            return Err(Error::InvalidFeatureSpec(format!(
                "need at least 2 features, got {}",
                features.len()
            )));
        }
        for (k, f) in features.iter().enumerate() {
            if features[..k].contains(f) {
                return Err(Error::InvalidFeatureSpec(format!("duplicate feature `{f}`")));
            }
        }
        Ok(Self { features })
    }

    /// Coordinates, colour and edge response.
    pub fn set1() -> Self {
        use Feature::*;
        Self {
            features: vec![Row, Col, Red, Green, Blue, EdgeMagnitude, EdgeOrientation],
        }
    }

    /// Coordinates and HSV.
    pub fn set2() -> Self {
        use Feature::*;
        Self {
            features: vec![Row, Col, Hue, Saturation, Value],
        }
    }

    /// HSV and edge response.
    pub fn set3() -> Self {
        use Feature::*;
        Self {
            features: vec![Hue, Saturation, Value, EdgeMagnitude, EdgeOrientation],
        }
    }

    pub fn preset(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::set1()),
            2 => Some(Self::set2()),
            3 => Some(Self::set3()),
            _ => None,
        }
    }

    /// Parses a comma separated list of feature names.
    pub fn parse_list(s: &str) -> Result<Self> {
        let features = s
            .split(',')
            .map(|t| t.trim().parse())
            .collect::<Result<Vec<_>>>()?;
        Self::new(features)
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn needs_derivatives(&self) -> bool {
        self.features.iter().any(|f| f.uses_derivatives())
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, feat) in self.features.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str(feat.name())?;
        }
        Ok(())
    }
}

/// Row-major `rows x cols` grid of length-`p` feature vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    rows: usize,
    cols: usize,
    p: usize,
    values: Vec<f64>,
}

impl FeatureTensor {
    pub fn zeros(rows: usize, cols: usize, p: usize) -> Self {
        Self {
            rows,
            cols,
            p,
            values: vec![0.0; rows * cols * p],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn pixel(&self, i: usize, j: usize) -> &[f64] {
        let k = (i * self.cols + j) * self.p;
        &self.values[k..k + self.p]
    }

    #[inline]
    pub fn pixel_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let k = (i * self.cols + j) * self.p;
        &mut self.values[k..k + self.p]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Writes the feature vector of pixel `(i, j)` into `out`.
///
/// `intensity` must be the intensity grid of `img`; it is only read when the
/// spec contains derivative features.
#[inline]
pub fn pixel_features(img: &RgbImage, intensity: &Grid, spec: &FeatureSpec, i: usize, j: usize, out: &mut [f64]) {
    let px = img.get(i, j);
    let mut grad: Option<(f64, f64)> = None;
    let mut hsv: Option<[f64; 3]> = None;
    let mut gradient = || *grad.get_or_insert_with(|| (raster::d_i(intensity, i, j), raster::d_j(intensity, i, j)));
    for (slot, feat) in out.iter_mut().zip(&spec.features) {
        *slot = match feat {
            Feature::Row => (i + 1) as f64,
            Feature::Col => (j + 1) as f64,
            Feature::Red => px[0] as f64,
            Feature::Green => px[1] as f64,
            Feature::Blue => px[2] as f64,
            Feature::AbsDi => gradient().0.abs(),
            Feature::AbsDj => gradient().1.abs(),
            Feature::AbsDii => raster::d_ii(intensity, i, j).abs(),
            Feature::AbsDjj => raster::d_jj(intensity, i, j).abs(),
            Feature::AbsDij => raster::d_ij(intensity, i, j).abs(),
            Feature::EdgeMagnitude => {
                let (a, b) = gradient();
                raster::edge_response(a, b).0
            }
            Feature::EdgeOrientation => {
                let (a, b) = gradient();
                raster::edge_response(a, b).1
            }
            Feature::Hue => hsv.get_or_insert_with(|| raster::pixel_hsv(px))[0],
            Feature::Saturation => hsv.get_or_insert_with(|| raster::pixel_hsv(px))[1],
            Feature::Value => hsv.get_or_insert_with(|| raster::pixel_hsv(px))[2],
        };
    }
}

fn check_dims(img: &RgbImage, spec: &FeatureSpec) -> Result<()> {
    if spec.needs_derivatives() && (img.rows() < 3 || img.cols() < 3) {
        return Err(Error::DimensionTooSmall {
            rows: img.rows(),
            cols: img.cols(),
        });
    }
    Ok(())
}

pub fn feature_tensor(img: &RgbImage, spec: &FeatureSpec) -> Result<FeatureTensor> {
    check_dims(img, spec)?;
    let intensity = raster::intensity(img);
    Ok(feature_tensor_with_intensity(img, &intensity, spec))
}

pub(crate) fn feature_tensor_with_intensity(img: &RgbImage, intensity: &Grid, spec: &FeatureSpec) -> FeatureTensor {
    let mut tensor = FeatureTensor::zeros(img.rows(), img.cols(), spec.len());
    for i in 0..img.rows() {
        for j in 0..img.cols() {
            pixel_features(img, intensity, spec, i, j, tensor.pixel_mut(i, j));
        }
    }
    tensor
}

/// Half-open pixel rectangle `[row0, row0 + rows) x [col0, col0 + cols)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelRect {
    pub row0: usize,
    pub col0: usize,
    pub rows: usize,
    pub cols: usize,
}

impl PixelRect {
    pub fn new(row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        Self { row0, col0, rows, cols }
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Grows the rectangle by `r` on every side and clips it to the image.
    pub fn dilate_clip(&self, r: usize, max_rows: usize, max_cols: usize) -> PixelRect {
        if self.is_empty() || self.row0 >= max_rows || self.col0 >= max_cols {
            return PixelRect::new(0, 0, 0, 0);
        }
        let r0 = self.row0.saturating_sub(r);
        let c0 = self.col0.saturating_sub(r);
        let r1 = (self.row0 + self.rows + r).min(max_rows);
        let c1 = (self.col0 + self.cols + r).min(max_cols);
        PixelRect::new(r0, c0, r1 - r0, c1 - c0)
    }
}

/// Recomputes the features inside `rect`, dilated by [`STENCIL_RADIUS`],
/// after `img` changed within `rect`. Values elsewhere are left alone.
pub fn recompute_feature_window(
    tensor: &mut FeatureTensor,
    img: &RgbImage,
    spec: &FeatureSpec,
    rect: PixelRect,
) -> Result<()> {
    check_dims(img, spec)?;
    if tensor.rows != img.rows() || tensor.cols != img.cols() || tensor.p != spec.len() {
        return Err(Error::DimensionMismatch(format!(
            "tensor {}x{}x{} vs image {}x{} with {} features",
            tensor.rows,
            tensor.cols,
            tensor.p,
            img.rows(),
            img.cols(),
            spec.len()
        )));
    }
    let window = rect.dilate_clip(STENCIL_RADIUS, img.rows(), img.cols());
    if window.is_empty() {
        return Ok(());
    }
    // stencils read one pixel beyond the window
    let support = window.dilate_clip(1, img.rows(), img.cols());
    let mut intensity = Grid::zeros(img.rows(), img.cols());
    if spec.needs_derivatives() {
        for i in support.row0..support.row0 + support.rows {
            for j in support.col0..support.col0 + support.cols {
                intensity.set(i, j, raster::pixel_intensity(img.get(i, j)));
            }
        }
    }
    for i in window.row0..window.row0 + window.rows {
        for j in window.col0..window.col0 + window.cols {
            pixel_features(img, &intensity, spec, i, j, tensor.pixel_mut(i, j));
        }
    }
    Ok(())
}
