//! Command line and live service for the hand digital twin.

pub mod cli;
pub mod commands;
pub mod protocol;
pub mod server;
pub mod session;

use std::process::ExitCode;

use clap::Parser;

/// Parses `args`, runs the subcommand and maps the outcome to an exit code:
/// 0 success, 1 runtime failure, 2 usage error.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let parsed = match cli::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(parsed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
