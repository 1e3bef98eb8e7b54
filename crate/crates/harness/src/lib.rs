//! Experiment orchestration for faithkit: training, attribution evaluation,
//! perturbation curves, interpolation and report rendering.
//!
//! Every command reads an [`ExperimentConfig`] and is a pure function of the
//! config, the seed and the input files.

pub mod config;
pub mod curves;
pub mod error;
pub mod evaluate;
pub mod interpolate;
pub mod report;
pub mod sampling;
pub mod synthetic;
pub mod train_cmd;
pub mod tuning;
pub mod workspace;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};

/// Version string written into every report.
pub const TOOLKIT_VERSION: &str = concat!("faithkit ", env!("CARGO_PKG_VERSION"));
