//! Command-line front end: file formats, configuration, parallel runners and
//! the subcommands built on them.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod runner;
pub mod stats;

pub use error::{CliError, Result};
