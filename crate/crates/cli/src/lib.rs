//! Command-line pipeline for the thin-film LN photon-pair toolkit.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult};
