//! Experiment harness behind the `polyexp` binary: model and data file I/O,
//! the timed Monte-Carlo-versus-heuristic benchmark, regression checks
//! against the bundled reference mixtures, the kernel-density-to-polynomial
//! pipeline for raw datasets, and curve emission for plotting.

// `!(x > 0.0)`-style guards deliberately treat NaN as a failure; see the
// same note in the library crate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod curves;
pub mod error;
pub mod faithful;
pub mod golden;
pub mod io;

pub use error::{CliError, Result};
