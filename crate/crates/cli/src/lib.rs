//! Library side of the `varmap` command: configuration, the experiment
//! pipeline, and the individual subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use pipeline::{run_experiment, Manifest, RunSummary};
