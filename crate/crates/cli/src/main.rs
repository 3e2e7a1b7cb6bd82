//! `idse` command-line tool: sketch, encode, decode, analyze, experiment, bdrate.

mod commands;

use std::process::ExitCode;

use clap::Parser;

use commands::{Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("idse: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                idse::Error::Io(_) => 1,
                idse::Error::Format(_) | idse::Error::GridMismatch { .. } => 3,
                idse::Error::Domain(_) | idse::Error::Convergence { .. } => 4,
            },
        }
    }
}
