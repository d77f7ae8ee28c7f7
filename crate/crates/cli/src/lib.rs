//! Library side of the `tqpsim` binary. Every subcommand is a plain function
//! so tests can drive it without spawning a process.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Context, Overrides, RunConfig, THREADS_ENV};
pub use error::CliError;
pub use output::{Check, Outcome};

/// Version string embedded in every output.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
