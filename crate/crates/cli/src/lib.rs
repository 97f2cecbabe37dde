//! Command line driver: Monte Carlo experiments, theory curves and
//! comparisons for the `esl` binary.

// NaN must fail range checks, hence `!(a < b)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod law_select;
pub mod output;

pub use config::{ExperimentConfig, ExperimentInput};
pub use error::CliError;
