//! Empirical spectral distributions of random matrices built from sums of
//! weighted rank-one terms, and the deterministic laws they converge to.

// `!(x <= tol)` is used on purpose so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensembles;
pub mod error;
pub mod limits;
pub mod measure;
pub mod metrics;
pub mod spectra;

pub use error::{EslError, Result};
pub use limits::{LimitLaw, SolveReport, SolverOptions};
pub use measure::{WeightMeasure, XiSpec};
pub use num_complex::Complex64;
