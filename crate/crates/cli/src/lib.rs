//! Front end for the radial solver: configuration, commands and reports.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cmd_limit, cmd_solve, cmd_sweep, cmd_verify, CommandOutput};
pub use config::{Format, RunConfig, OUT_DIR_ENV};
pub use error::CliError;
pub use report::ReportBundle;
