//! Command-line front end for `kscale-core`: data generation, scale
//! selection, embedding, dimension estimation and classification sweeps,
//! plus the CSV and JSON formats they read and write.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use commands::run;
pub use config::Cli;
pub use error::{CliError, CliResult};
