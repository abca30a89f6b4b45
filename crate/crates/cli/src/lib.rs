//! Command-line plumbing for `panelcov`: configuration, the four
//! subcommands, and report rendering.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cmd_analyze, cmd_ingest, cmd_report, cmd_simulate, run_analysis};
pub use config::{InputSource, RunConfig};
pub use error::{CliError, Result};
