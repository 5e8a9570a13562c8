//! `bachelier`: command-line front end for the pricing and term-structure
//! engine. Reports are JSON (or CSV for surfaces and paths) with every
//! computed float printed to 9 significant digits.
//!
//! Exit codes: 0 success, 1 validation failure, 2 input error, 3 numerical
//! error.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// A failure that ends the process with a specific exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    /// The validation suite ran and at least one criterion failed.
    Validation,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<bachelier_core::Error> for CliError {
    fn from(e: bachelier_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Input(m) => eprintln!("error: {m}"),
                CliError::Numerical(m) => eprintln!("numerical error: {m}"),
                CliError::Validation => eprintln!("validation failed"),
            }
            ExitCode::from(e.code())
        }
    }
}
