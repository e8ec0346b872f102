//! Binary entry point: parse, dispatch, map errors to exit codes.

use std::process::ExitCode;

use clap::Parser;

use drs_cli::cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match drs_cli::run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if drs_cli::is_validation_error(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
