//! Config-driven runs of the null-curve toolkit.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, sweep};
pub use config::{load, Mode};
pub use error::CliError;
