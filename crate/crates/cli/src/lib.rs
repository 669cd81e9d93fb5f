//! File formats and subcommands behind the `mihe` binary.

pub mod commands;
pub mod error;
pub mod formats;

pub use commands::{Cli, Command};
pub use error::{CliError, ExitCode};

/// Runs one parsed invocation.
pub fn run(cli: Cli) -> Result<(), CliError> {
    commands::dispatch(cli)
}
