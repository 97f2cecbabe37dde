use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EslError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("duplicate atom at xi = {0}")]
    DuplicateAtom(f64),

    #[error("matrix side {n} does not equal r*d = {r}*{d}")]
    DimensionMismatch { n: usize, r: usize, d: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver failed to converge")]
    EigenSolver,

    #[error("Stieltjes argument must be non-real, got {0}")]
    RealArgument(Complex64),

    #[error("fixed-point iteration did not converge at z = {z} after {iterations} iterations (residual {residual:e})")]
    NoConvergence { z: Complex64, iterations: usize, residual: f64 },

    #[error("denominator 1 + xi*f vanished at z = {z} (|1 + xi*f| = {modulus:e})")]
    Singularity { z: Complex64, modulus: f64 },

    #[error("no root satisfies the Stieltjes constraints at z = {0}")]
    BranchAmbiguity(Complex64),

    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, EslError>;

impl From<std::io::Error> for EslError {
    fn from(e: std::io::Error) -> Self {
        EslError::Io(e.to_string())
    }
}
