//! Command-line driver and HTTP query service for `motret`.

pub mod commands;
pub mod serve;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

pub use commands::Cli;

/// Parses `args` and runs the chosen subcommand. Usage errors exit with 2,
/// runtime failures with 1.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match commands::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
