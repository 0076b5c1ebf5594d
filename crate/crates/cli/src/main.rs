//! `mevr` — run rebate operators, audits, Sybil-attack searches, the
//! prior-optimal LP, CFMM game generation, auctions, and the built-in
//! reference checks from the command line.
//!
//! Exit codes: 0 success, 1 validation error (bad flags, unreadable or
//! invalid input, failed reference check reported as data), 2 internal
//! assertion failure.

mod commands;
mod output;

use clap::error::ErrorKind;
use clap::Parser;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprintln!("{err}");
                    ExitCode::from(1)
                }
            };
        }
    };

    match catch_unwind(AssertUnwindSafe(|| commands::run(cli))) {
        Ok(Ok(code)) => ExitCode::from(code),
        Ok(Err(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| panic.downcast_ref::<&str>().copied())
                .unwrap_or("unknown internal failure");
            eprintln!("internal assertion failure: {message}");
            ExitCode::from(2)
        }
    }
}
