//! Structured greedy pursuit for multiple measurement vectors.
//!
//! Sparse approximation of a data matrix S by D X proceeds one feasible
//! sparsity pattern at a time: each pattern is a set of (atom, measurement)
//! pairs whose measurement points are connected at radius sigma and whose
//! atom parameters vary tau-Lipschitz across measurements. The two
//! parameters interpolate between per-column pursuit (both infinite),
//! vectorized pursuit (sigma = 0) and simultaneous row selection (tau = 0).
//!
//! The crate also provides dictionary builders (Gaussian and Gabor
//! convolution families, cardinal B-splines), Babel-function recovery
//! analysis, polynomial pattern denoising and inpainting, and a seeded
//! benchmark harness. The `gmomp-cli` crate wraps all of it behind a
//! command line.

pub mod analysis;
pub mod dictionary;
pub mod error;
pub mod experiments;
pub mod io;
mod polyfit;
pub mod postprocess;
pub mod solver;
pub mod spaces;

pub use dictionary::{Dictionary, DictionaryBuilder};
pub use error::{Error, Result};
pub use solver::{
    effective_floor, gm_omp, greedy_choice, omp, per_column_omp, restricted_least_squares, somp,
    vectorized_omp, MeasurementMatrix, OmpResult, Solution, StopCriteria,
};
pub use spaces::{FeasibleParams, MetricKind, Pattern, PointSpace};
