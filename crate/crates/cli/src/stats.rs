//! The `stats` subcommand: reads a results.csv, runs the omnibus and
//! pairwise rank tests per dataset and metric, and writes significance
//! grids plus a tidy pairwise table.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use lexidate::stats::{
    compare_strategies, table_grid, ComparisonReport, GroupedSamples, StatsError, TableGrid,
};

use crate::experiment::{read_results, ResultRow};
use crate::CliError;

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// results.csv produced by the experiment subcommand
    #[arg(long)]
    pub results: PathBuf,

    /// Directory to write grids and the pairwise table into
    #[arg(long)]
    pub out: PathBuf,

    /// Significance level for the omnibus and adjusted pairwise tests
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,

    /// Treatment whose column is compared against every other; defaults to
    /// the first label containing "cv", else the first label seen
    #[arg(long)]
    pub reference: Option<String>,
}

const METRICS: [&str; 2] = ["test_accuracy", "test_complexity"];

fn metric_value(row: &ResultRow, metric: &str) -> Option<f64> {
    match metric {
        "test_accuracy" => row.test_accuracy,
        "test_complexity" => row.test_complexity.map(|c| c as f64),
        _ => unreachable!("unknown metric {metric}"),
    }
}

/// Keeps first-appearance order while deduplicating.
fn ordered_unique(values: impl Iterator<Item = String>) -> Vec<String> {
    let mut seen = Vec::new();
    for v in values {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen
}

fn pick_reference(labels: &[String], requested: Option<&str>) -> Result<String, CliError> {
    if let Some(name) = requested {
        if !labels.iter().any(|l| l == name) {
            return Err(CliError::Usage(format!(
                "reference treatment {name:?} does not appear in the results (have {labels:?})"
            )));
        }
        return Ok(name.to_string());
    }
    let cv_like = labels.iter().find(|l| l.to_lowercase().contains("cv"));
    Ok(cv_like.unwrap_or(&labels[0]).clone())
}

fn usage_from_stats(context: &str, e: StatsError) -> CliError {
    CliError::Usage(format!("{context}: {e}"))
}

pub fn execute(args: StatsArgs) -> Result<(), CliError> {
    let rows = read_results(&args.results)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.results.display())))?;
    // Rows with empty metric cells are failed runs; they carry no sample.
    let complete: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.test_accuracy.is_some() && r.test_complexity.is_some())
        .collect();
    if complete.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no completed runs to analyze",
            args.results.display()
        )));
    }

    let datasets = ordered_unique(complete.iter().map(|r| r.dataset.clone()));
    let labels = ordered_unique(complete.iter().map(|r| r.treatment.clone()));
    if labels.len() < 2 {
        return Err(CliError::Usage(format!(
            "need at least two treatments to compare, found {labels:?}"
        )));
    }
    let reference = pick_reference(&labels, args.reference.as_deref())?;
    let columns: Vec<String> = labels.iter().filter(|l| **l != reference).cloned().collect();

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;

    // reports[metric] -> rows of (dataset, report) in dataset order
    let mut reports: BTreeMap<&str, Vec<(String, ComparisonReport)>> = BTreeMap::new();
    for dataset in &datasets {
        for metric in METRICS {
            let mut samples: Vec<(String, Vec<f64>)> =
                labels.iter().map(|l| (l.clone(), Vec::new())).collect();
            for row in complete.iter().filter(|r| &r.dataset == dataset) {
                let value = metric_value(row, metric)
                    .expect("complete rows carry every metric");
                let slot = samples
                    .iter_mut()
                    .find(|(label, _)| *label == row.treatment);
                if let Some((_, bucket)) = slot {
                    bucket.push(value);
                }
            }
            let context = format!("{dataset}/{metric}");
            let grouped = GroupedSamples::new(samples)
                .map_err(|e| usage_from_stats(&context, e))?;
            let report = compare_strategies(&grouped, args.alpha)
                .map_err(|e| usage_from_stats(&context, e))?;
            reports.entry(metric).or_default().push((dataset.clone(), report));
        }
    }

    let mut pairwise_path = args.out.clone();
    pairwise_path.push("pairwise.csv");
    write_pairwise(&pairwise_path, &reports)?;

    for metric in METRICS {
        let entries = &reports[metric];
        let grid: TableGrid = table_grid(metric, &reference, &columns, entries);

        let text = grid.render_text();
        println!("{text}");

        let txt_path = args.out.join(format!("{metric}_grid.txt"));
        std::fs::write(&txt_path, format!("{text}\n"))
            .map_err(|e| CliError::Runtime(format!("{}: {e}", txt_path.display())))?;

        let csv_path = args.out.join(format!("{metric}_grid.csv"));
        std::fs::write(&csv_path, grid.render_csv())
            .map_err(|e| CliError::Runtime(format!("{}: {e}", csv_path.display())))?;
    }
    println!(
        "wrote {} and per-metric grids under {}",
        pairwise_path.display(),
        args.out.display()
    );
    Ok(())
}

/// One row per tested pair, long-form, for downstream tooling.
fn write_pairwise(
    path: &std::path::Path,
    reports: &BTreeMap<&str, Vec<(String, ComparisonReport)>>,
) -> Result<(), CliError> {
    let io_err = |e: csv::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    writer
        .write_record([
            "dataset",
            "metric",
            "treatment_a",
            "treatment_b",
            "u_statistic",
            "p_raw",
            "p_adjusted",
            "significant",
        ])
        .map_err(io_err)?;
    for (metric, entries) in reports {
        for (dataset, report) in entries {
            for pair in &report.pairs {
                writer
                    .write_record([
                        dataset.as_str(),
                        metric,
                        pair.label_a.as_str(),
                        pair.label_b.as_str(),
                        &format!("{}", pair.u),
                        &format!("{:.6}", pair.p_raw),
                        &format!("{:.6}", pair.p_adjusted),
                        if pair.significant { "true" } else { "false" },
                    ])
                    .map_err(io_err)?;
            }
        }
    }
    writer
        .flush()
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(())
}
