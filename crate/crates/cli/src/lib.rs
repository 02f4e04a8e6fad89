//! Library side of the `rfsep` command: experiment configuration and the
//! subcommand implementations, usable without going through the binary.

pub mod commands;
pub mod config;
mod error;

pub use config::{parse_override, BenchConfig, EvaluateConfig, ExperimentConfig};
pub use error::{CliError, Result};
