//! Configuration, orchestration and file outputs for the `grac` binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_audit, cmd_check_potential, cmd_run, exit_code, Failure};
pub use config::{Experiment, ExperimentConfig, ForceSpec};
