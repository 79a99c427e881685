//! Command-line front end: experiment configs, report files and the
//! validation suites.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod output;
pub mod suites;

pub use app::{run, Cli};
pub use config::{ExperimentConfig, InstanceSpec};
