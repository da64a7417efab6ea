//! Batch driver for expectation value sampler experiments.
//!
//! A TOML config (see [`config`]) describes the target, encoder and command
//! settings; [`commands::execute`] runs one command and writes its artifacts.

pub mod commands;
pub mod config;

pub use commands::{execute, CliError};
pub use config::{parse_config, parse_config_str, Command, ConfigError, ExperimentConfig};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "EVSAMPLER_THREADS";
