//! The `snac` command-line interface and annotation service.

pub mod commands;
pub mod error;
pub mod input;
pub mod server;

use std::ffi::OsString;

use clap::Parser;

use crate::commands::{execute, Cli};
use crate::error::{EXIT_OK, EXIT_USAGE};

/// Runs the CLI on `argv` and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if !matches!(e, error::CliError::Reported) {
                eprintln!("{}", serde_json::to_string_pretty(&e.report()).unwrap_or_else(|_| e.to_string()));
            }
            e.exit_code()
        }
    }
}
