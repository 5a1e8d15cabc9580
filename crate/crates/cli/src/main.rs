mod args;
mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};
use commands::Status;
use settings::ConfigFile;

/// Exit codes: 0 success, 1 usage, 2 partial or degenerate, 3 validation
/// failure.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] meanfield::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use meanfield::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Core(E::InvalidParameter(_)) => 1,
            CliError::Core(E::NoConvergence { .. }) => 3,
            CliError::Core(_) => 2,
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MEANFIELD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("MEANFIELD_THREADS must be a positive integer (got {raw:?})")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: &Cli) -> Result<Status, CliError> {
    init_threads()?;
    let file = ConfigFile::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Beta(a) => commands::beta(a, &file),
        Command::Roots(a) => commands::roots(a, &file),
        Command::Bifurcation(a) => commands::bifurcation(a, &file),
        Command::Validate(a) => commands::validate_cmd(a, &file),
        Command::Crosscheck(a) => commands::crosscheck(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Ok(Status::Failed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
