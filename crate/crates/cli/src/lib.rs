//! Command-line experiment runner for the `qadvect` emulator.
//!
//! Every run writes `manifest.json` (resolved configuration, seeds and
//! versions) and `summary.json` into its output directory, next to the
//! experiment-specific CSV tables and PGM images.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;
