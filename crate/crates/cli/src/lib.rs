//! Experiment runner for the `mvsoftmax` loss family: TOML experiment files,
//! the named comparison grid, `t` sweeps and plain-text artifacts.

pub mod config;
pub mod error;
pub mod eval_files;
pub mod experiment;
pub mod presets;
pub mod report;

pub use config::ExperimentSpec;
pub use error::{CliError, Result};
pub use experiment::{run_experiment, run_method, sweep_t, MethodResult};
