//! Command-line orchestration: configuration, caching, artifact output and subcommands.

pub mod cache;
pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, Command};
pub use config::{ExperimentConfig, Mode, Overrides, Physics};
