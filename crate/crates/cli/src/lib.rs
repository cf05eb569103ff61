//! Batch driver for the charged Q-ball laboratory: strict configuration
//! parsing, subcommand dispatch over a worker pool, and atomically committed
//! artifact directories.

pub mod artifacts;
pub mod commands;
pub mod config;

pub use commands::{run, CommandError, Outcome, Subcommand};
pub use config::{ConfigError, RunConfig};
