use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image is {rows}x{cols}, derivative features need at least 3x3")]
    DimensionTooSmall { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("invalid feature list: {0}")]
    InvalidFeatureSpec(String),

    #[error("matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("matrix is not nearly positive semidefinite (smallest eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    NotNearlyPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error("symmetric eigensolver did not converge after {0} sweeps")]
    ConvergenceFailure(usize),

    #[error("image {rows}x{cols} too small for regions of half-width {half_width}")]
    ImageTooSmall {
        rows: usize,
        cols: usize,
        half_width: usize,
    },

    #[error("saliency map is identically zero")]
    DegenerateImage,

    #[error("weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),

    #[error("output {0} is not a mixture of source and target")]
    NotAMixture(usize),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    /// Errors caused by bad user input rather than a failing run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::DimensionMismatch(_)
                | Error::DimensionTooSmall { .. }
                | Error::ImageTooSmall { .. }
                | Error::InvalidFeatureSpec(_)
                | Error::WeightOutOfRange(_)
        )
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{key}`{}", if *line > 0 { format!(" on line {line}") } else { String::new() })]
    UnknownKey { key: String, line: usize },

    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("line {0}: expected `key = value`")]
    Malformed(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
