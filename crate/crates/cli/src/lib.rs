//! Library side of the `netinfer` command: file formats, artifacts and the
//! subcommand implementations.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;

pub use error::{CliError, CliResult};
