//! Library side of the `graham-seq` command-line tool.

pub mod cli;
pub mod commands;
pub mod error;
pub mod io;
pub mod record;

pub use error::{CliError, CliResult};
