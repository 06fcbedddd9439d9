//! The `experiment` subcommand: a JSON plan fans out into dataset x
//! treatment x replicate runs, appending one row per run to results.csv.
//! Reruns skip rows that already exist, so an interrupted batch picks up
//! where it stopped.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use lexidate::dataset::Dataset;
use lexidate::evolution::{self, RunConfig, StrategyConfig};
use serde::{Deserialize, Serialize};

use crate::run::map_run_error;
use crate::CliError;

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// JSON experiment plan (see the README for the format)
    #[arg(long)]
    pub plan: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDataset {
    pub path: PathBuf,
    pub target: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Treatment {
    pub label: String,
    pub strategy: StrategyConfig,
}

/// Engine knobs shared by every run of the plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSettings {
    pub pop_size: usize,
    pub generations: usize,
    pub max_nodes: usize,
    pub time_limit: f64,
    pub test_fraction: f64,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings {
            pop_size: 48,
            generations: 200,
            max_nodes: 10,
            time_limit: 60.0,
            test_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub datasets: Vec<PlanDataset>,
    pub treatments: Vec<Treatment>,
    pub replicates: u64,
    /// Replicate r uses seed base_seed + r for every treatment, pairing the
    /// data splits across strategies within a replicate.
    pub base_seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub engine: EngineSettings,
}

impl ExperimentPlan {
    fn validate(&self) -> Result<(), CliError> {
        let usage = |msg: String| Err(CliError::Usage(msg));
        if self.datasets.is_empty() {
            return usage("the plan lists no datasets".into());
        }
        if self.treatments.is_empty() {
            return usage("the plan lists no treatments".into());
        }
        if self.replicates == 0 {
            return usage("replicates must be at least 1".into());
        }
        let mut labels = BTreeSet::new();
        for t in &self.treatments {
            if !labels.insert(t.label.as_str()) {
                return usage(format!("duplicate treatment label {:?}", t.label));
            }
        }
        Ok(())
    }
}

/// One line of results.csv. Runs that failed keep their key columns and
/// leave every metric empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub treatment: String,
    pub replicate: u64,
    pub seed: u64,
    pub test_accuracy: Option<f64>,
    pub test_complexity: Option<u64>,
    pub total_fit_calls: Option<u64>,
    pub wall_time: Option<f64>,
}

pub const RESULTS_HEADER: [&str; 8] = [
    "dataset",
    "treatment",
    "replicate",
    "seed",
    "test_accuracy",
    "test_complexity",
    "total_fit_calls",
    "wall_time",
];

/// Parses a results.csv, validating the header.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.iter().ne(RESULTS_HEADER) {
        return Err(format!(
            "unexpected columns {:?}, want {:?}",
            headers.iter().collect::<Vec<_>>(),
            RESULTS_HEADER
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize::<ResultRow>().enumerate() {
        rows.push(record.map_err(|e| format!("row {}: {e}", i + 2))?);
    }
    Ok(rows)
}

pub fn execute(args: ExperimentArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.plan)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.plan.display())))?;
    let plan: ExperimentPlan = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.plan.display())))?;
    plan.validate()?;

    // Load every dataset up front; a plan that cannot load is a usage error,
    // not a batch of guaranteed-failed rows.
    let mut datasets = Vec::with_capacity(plan.datasets.len());
    let mut names = BTreeSet::new();
    for entry in &plan.datasets {
        let ds = Dataset::load_csv(&entry.path, &entry.target)
            .map_err(|e| CliError::Usage(format!("{}: {e}", entry.path.display())))?;
        if !names.insert(ds.name.clone()) {
            return Err(CliError::Usage(format!(
                "two datasets share the name {:?}; rename one file",
                ds.name
            )));
        }
        datasets.push(ds);
    }

    std::fs::create_dir_all(&plan.output_dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", plan.output_dir.display())))?;
    let results_path = plan.output_dir.join("results.csv");

    let mut done: BTreeSet<(String, String, u64)> = BTreeSet::new();
    let resuming = results_path.exists();
    if resuming {
        let rows = read_results(&results_path).map_err(|e| {
            CliError::Runtime(format!("{}: {e}", results_path.display()))
        })?;
        for row in rows {
            done.insert((row.dataset, row.treatment, row.replicate));
        }
    }

    let mut writer = if resuming {
        let file = std::fs::OpenOptions::new()
            .append(true)
            .open(&results_path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", results_path.display())))?;
        csv::WriterBuilder::new().has_headers(false).from_writer(file)
    } else {
        csv::WriterBuilder::new()
            .has_headers(true)
            .from_writer(std::fs::File::create(&results_path).map_err(|e| {
                CliError::Runtime(format!("{}: {e}", results_path.display()))
            })?)
    };

    let io_err =
        |e: csv::Error| CliError::Runtime(format!("{}: {e}", results_path.display()));

    let mut executed = 0u64;
    let mut skipped = 0u64;
    let mut failed = 0u64;
    for ds in &datasets {
        for treatment in &plan.treatments {
            for replicate in 0..plan.replicates {
                let key = (ds.name.clone(), treatment.label.clone(), replicate);
                if done.contains(&key) {
                    skipped += 1;
                    continue;
                }
                let seed = plan.base_seed + replicate;
                let mut config = RunConfig::new(treatment.strategy.clone(), seed);
                config.pop_size = plan.engine.pop_size;
                config.generations = plan.engine.generations;
                config.max_nodes = plan.engine.max_nodes;
                config.time_limit = plan.engine.time_limit;
                config.test_fraction = plan.engine.test_fraction;
                // a plan with out-of-range engine settings is a usage error
                config.validate().map_err(map_run_error)?;

                let started = Instant::now();
                let row = match evolution::run(&config, ds) {
                    Ok(result) => {
                        executed += 1;
                        println!(
                            "{} / {} / replicate {replicate}: test accuracy {:.4}",
                            ds.name, treatment.label, result.test_accuracy
                        );
                        ResultRow {
                            dataset: ds.name.clone(),
                            treatment: treatment.label.clone(),
                            replicate,
                            seed,
                            test_accuracy: Some(result.test_accuracy),
                            test_complexity: Some(result.test_complexity),
                            total_fit_calls: Some(result.total_fit_calls),
                            wall_time: Some(started.elapsed().as_secs_f64()),
                        }
                    }
                    Err(e) => {
                        failed += 1;
                        eprintln!(
                            "{} / {} / replicate {replicate} failed: {e}",
                            ds.name, treatment.label
                        );
                        ResultRow {
                            dataset: ds.name.clone(),
                            treatment: treatment.label.clone(),
                            replicate,
                            seed,
                            test_accuracy: None,
                            test_complexity: None,
                            total_fit_calls: None,
                            wall_time: Some(started.elapsed().as_secs_f64()),
                        }
                    }
                };
                writer.serialize(&row).map_err(io_err)?;
                writer
                    .flush()
                    .map_err(|e| CliError::Runtime(format!("{}: {e}", results_path.display())))?;
            }
        }
    }

    println!(
        "{executed} runs executed, {skipped} skipped (already present), {failed} failed; results in {}",
        results_path.display()
    );
    Ok(())
}
