//! IO, parallel experiment runner and subcommands for `tvgeo-core`.
//!
//! The `tvgeo` binary wraps [`commands`]; the functions are public so the
//! acceptance suite and other drivers can call them directly.

pub mod commands;
pub mod error;
pub mod io;
pub mod runner;

pub use error::{CliError, Result};
