//! Command-line front end: single runs, replicated experiments, and the
//! statistical report over an experiment's results.

mod experiment;
mod run;
mod stats;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit contract: 0 success, 1 runtime failure, 2 usage error. Flag parse
/// errors also exit 2 (clap's default).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "lexidate",
    version,
    about = "Evolves machine-learning pipelines and compares evaluation strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one evolutionary run and write its document as JSON
    Run(run::RunArgs),
    /// Run every treatment x replicate of a JSON experiment plan
    Experiment(experiment::ExperimentArgs),
    /// Compare treatments in a results.csv and emit grid reports
    Stats(stats::StatsArgs),
}

/// Sizes the global worker pool from LEXIDATE_WORKERS (default: all cores).
fn configure_workers() -> Result<(), CliError> {
    let raw = match std::env::var("LEXIDATE_WORKERS") {
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(CliError::Usage(format!("LEXIDATE_WORKERS: {e}"))),
        Ok(raw) => raw,
    };
    let workers: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!(
                "LEXIDATE_WORKERS must be a positive integer, got {raw:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::Runtime(format!("failed to size the worker pool: {e}")))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => run::execute(args),
        Command::Experiment(args) => experiment::execute(args),
        Command::Stats(args) => stats::execute(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_workers().and_then(|()| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
