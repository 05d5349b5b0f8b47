//! Command implementations behind the `isa` binary: instance generation and
//! checking, configured solver runs with CSV traces and JSON summaries, and
//! the inexact-versus-accurate projection comparison.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_check, cmd_figure2, cmd_generate, cmd_run, figure2, Figure2Params};
pub use config::RunConfig;
pub use error::{CliError, Result};
