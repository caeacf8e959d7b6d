//! Configuration-driven experiments on top of `tavis-core`: one TOML file per
//! run, CSV tables plus JSON metadata out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod config;
pub mod error;
pub mod output;
pub mod runs;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::RunError;
pub use output::{RunResult, Table};
pub use runs::{run_and_write, run_experiment};
