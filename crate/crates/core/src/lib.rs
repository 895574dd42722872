//! Evolutionary composition of two equal-size images.
//!
//! A `(mu+1)` genetic algorithm evolves pixel masks that mix a source and a
//! target image. Fitness compares region covariance descriptors of the
//! candidate against those of both inputs under one of three SPD metrics.

pub mod config;
pub mod error;
pub mod evolution;
pub mod features;
pub mod fitness;
pub mod raster;
pub mod region;
pub mod run;
pub mod saliency;
pub mod spd;

pub use error::{ConfigError, Error, Result};
