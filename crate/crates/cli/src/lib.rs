//! Config-driven runner for the `pdem-core` campaigns.

pub mod config;
pub mod runner;

pub use config::{parse_config, parse_config_str, Campaign, ConfigError, ExperimentConfig};
pub use runner::{run, Outcome, RunSummary, Status};
