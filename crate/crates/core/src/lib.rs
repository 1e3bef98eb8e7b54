//! Post-hoc attribution methods and faithfulness metrics for a small
//! differentiable text classifier.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the type
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! command-line harness and the tolerance-bearing tests use.

pub mod attribution;
pub mod certify;
pub mod checkpoint;
pub mod corpus;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod scalar;
pub mod synthetic;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Classifier over `f64`.
pub type Model = model::ClassifierModel<f64>;
/// `n × d` input embedding matrix over `f64`.
pub type Embeddings = ndarray::Array2<f64>;
/// Forward trace over `f64`.
pub type Trace = model::ForwardTrace<f64>;
/// Certification bounds over `f64`.
pub type Bounds = certify::LinearBounds<f64>;
/// Interval bounds over `f64`.
pub type Intervals = certify::IntervalBounds<f64>;
