//! The `run` subcommand: one dataset, one strategy, one seed.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use lexidate::dataset::Dataset;
use lexidate::evolution::{self, RunConfig, RunError, StrategyConfig};

use crate::CliError;

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum StrategyArg {
    /// Stratified k-fold cross-validation
    Cv,
    /// Learning/selection split with per-sample grades
    Lexidate,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Training data CSV (header row, one label column)
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the label column
    #[arg(long)]
    pub target: String,
    /// Evaluation strategy
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    /// Fold count for cv (default 10); rejected for lexidate
    #[arg(long)]
    pub folds: Option<usize>,
    /// Learning fraction for lexidate (default 0.9); rejected for cv
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long, default_value_t = 48)]
    pub pop_size: usize,
    #[arg(long, default_value_t = 200)]
    pub generations: usize,
    #[arg(long, default_value_t = 10)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-pipeline-evaluation budget in seconds
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    /// Fraction held out as the final test set
    #[arg(long, default_value_t = 0.25)]
    pub test_fraction: f64,
    /// Where to write the run document JSON
    #[arg(long)]
    pub out: PathBuf,
}

/// Resolves the strategy flags, rejecting the combinations that mix the two
/// strategies' knobs.
pub fn resolve_strategy(
    strategy: StrategyArg,
    folds: Option<usize>,
    split: Option<f64>,
) -> Result<StrategyConfig, CliError> {
    match strategy {
        StrategyArg::Cv => {
            if split.is_some() {
                return Err(CliError::Usage(
                    "--split applies only to --strategy lexidate".into(),
                ));
            }
            Ok(StrategyConfig::Cv {
                folds: folds.unwrap_or(10),
            })
        }
        StrategyArg::Lexidate => {
            if folds.is_some() {
                return Err(CliError::Usage(
                    "--folds applies only to --strategy cv".into(),
                ));
            }
            Ok(StrategyConfig::Lexidate {
                learn_fraction: split.unwrap_or(0.9),
            })
        }
    }
}

/// Maps engine errors onto the exit contract: config rejections are usage
/// errors, everything after a valid config is a runtime failure.
pub fn map_run_error(e: RunError) -> CliError {
    match e {
        RunError::Config(msg) => CliError::Usage(msg),
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn execute(args: RunArgs) -> Result<(), CliError> {
    let strategy = resolve_strategy(args.strategy, args.folds, args.split)?;
    let mut config = RunConfig::new(strategy, args.seed);
    config.pop_size = args.pop_size;
    config.generations = args.generations;
    config.max_nodes = args.max_nodes;
    config.time_limit = args.time_limit;
    config.test_fraction = args.test_fraction;
    config.validate().map_err(map_run_error)?;

    let ds = Dataset::load_csv(&args.data, &args.target)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.data.display())))?;

    let result = evolution::run(&config, &ds).map_err(map_run_error)?;
    let doc = result.document();

    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Runtime(format!("failed to serialize the run document: {e}")))?;
    std::fs::write(&args.out, json + "\n")
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;

    println!("dataset {} ({} samples)", ds.name, ds.n_samples());
    println!("strategy {}", config.strategy.label());
    println!("winning pipeline:");
    print!("{}", doc.best_pipeline);
    println!(
        "selection accuracy {:.4}, complexity {}",
        doc.best_selection_accuracy, doc.best_complexity
    );
    println!(
        "test accuracy {:.4}, test complexity {}",
        doc.test_accuracy, doc.test_complexity
    );
    println!("total fit calls {}", doc.total_fit_calls);
    println!("wrote {}", args.out.display());
    Ok(())
}
