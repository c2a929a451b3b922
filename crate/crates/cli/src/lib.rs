//! Command-line orchestration of the augmentation experiment.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod seeds;

pub use config::ExperimentConfig;
pub use error::{Category, CliError, CliResult};
