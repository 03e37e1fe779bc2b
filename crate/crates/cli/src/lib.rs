//! Batch front end: reads a run config, calls the solver and writes CSV.

pub mod commands;
pub mod config;
pub mod error;
pub mod run;
pub mod table;

pub use error::{CliError, CliResult};
