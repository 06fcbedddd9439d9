//! The generational loop: initialize a random population, evaluate it under
//! the configured strategy, pick parents by lexicase, mutate each into one
//! offspring, and repeat. There is no survival selection — every generation
//! is offspring only — and nothing is ever re-evaluated; every record lands
//! in the run archive, from which the final winner is chosen, refit on the
//! whole training subset, and scored once on the untouched test subset.
//!
//! Determinism: all random decisions draw from streams keyed by
//! (seed, purpose, generation, index), so a run is bit-for-bit reproducible
//! regardless of how many worker threads evaluate pipelines.

use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    stratified_kfold, stratified_split, Dataset, DatasetError, FoldSet, SplitPair,
};
use crate::evaluation::{
    assemble_matrix, evaluate_cv, evaluate_lexidate, grade, grade_mean, EvaluationError,
    EvaluationRecord, StrategyKind,
};
use crate::pipeline::{
    dump, fit_pipeline, predict_pipeline, random_pipeline, PipelineError, PipelineGraph,
};
use crate::rng::{purpose, stream};
use crate::selection::{best_record, select_parents, SelectionError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyConfig {
    /// Learning/selection split evaluation; `learn_fraction` of the training
    /// subset is fitted on, the rest graded per sample.
    Lexidate { learn_fraction: f64 },
    /// Stratified k-fold cross-validation.
    Cv { folds: usize },
}

impl StrategyConfig {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyConfig::Lexidate { .. } => StrategyKind::Lexidate,
            StrategyConfig::Cv { .. } => StrategyKind::CrossValidation,
        }
    }

    /// Human-readable default label, e.g. `lexidate(0.9)` or `cv(10)`.
    pub fn label(&self) -> String {
        match self {
            StrategyConfig::Lexidate { learn_fraction } => format!("lexidate({learn_fraction})"),
            StrategyConfig::Cv { folds } => format!("cv({folds})"),
        }
    }
}

fn default_mutate_offspring() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub strategy: StrategyConfig,
    pub pop_size: usize,
    pub max_nodes: usize,
    pub generations: usize,
    /// Per-pipeline-evaluation budget in seconds.
    pub time_limit: f64,
    pub seed: u64,
    /// Fraction of the dataset held out as the final test set.
    pub test_fraction: f64,
    /// Normally true. Disabling it makes every offspring a verbatim copy of
    /// its parent, which pins the pipeline sequence for fit-call accounting
    /// experiments.
    #[serde(default = "default_mutate_offspring")]
    pub mutate_offspring: bool,
}

impl RunConfig {
    pub fn new(strategy: StrategyConfig, seed: u64) -> RunConfig {
        RunConfig {
            strategy,
            pop_size: 48,
            max_nodes: 10,
            generations: 200,
            time_limit: 60.0,
            seed,
            test_fraction: 0.25,
            mutate_offspring: true,
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let fail = |msg: String| Err(RunError::Config(msg));
        match &self.strategy {
            StrategyConfig::Lexidate { learn_fraction } => {
                if !learn_fraction.is_finite() || *learn_fraction <= 0.0 || *learn_fraction >= 1.0
                {
                    return fail(format!(
                        "learn_fraction must lie strictly between 0 and 1, got {learn_fraction}"
                    ));
                }
            }
            StrategyConfig::Cv { folds } => {
                if *folds < 2 {
                    return fail(format!("cross-validation needs at least 2 folds, got {folds}"));
                }
            }
        }
        if self.pop_size == 0 {
            return fail("pop_size must be positive".into());
        }
        if self.max_nodes == 0 {
            return fail("max_nodes must be positive".into());
        }
        if self.generations == 0 {
            return fail("generations must be positive".into());
        }
        if !self.time_limit.is_finite() || self.time_limit <= 0.0 || self.time_limit > 1e9 {
            return fail(format!(
                "time_limit must be a positive number of seconds, got {}",
                self.time_limit
            ));
        }
        if !self.test_fraction.is_finite()
            || self.test_fraction <= 0.0
            || self.test_fraction >= 1.0
        {
            return fail(format!(
                "test_fraction must lie strictly between 0 and 1, got {}",
                self.test_fraction
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub generation: usize,
    /// How many of the generation's pop_size evaluations were valid.
    pub valid: usize,
    pub best_selection_accuracy: f64,
    pub mean_selection_accuracy: f64,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("every pipeline in generation {generation} failed evaluation")]
    AllInvalid { generation: usize },
    #[error("winning pipeline failed its final refit: {0}")]
    FinalRefit(PipelineError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
}

/// Everything a run produced. The archive holds every evaluation ever made,
/// in (generation, population index) order.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub dataset: String,
    pub archive: Vec<EvaluationRecord>,
    pub generations: Vec<GenerationSummary>,
    /// Clone of the winning archive record.
    pub best: EvaluationRecord,
    pub test_accuracy: f64,
    pub test_complexity: u64,
    /// Sum of fit calls over the archive. The winner's final refit is
    /// bookkept separately and not included.
    pub total_fit_calls: u64,
}

/// The serializable face of a [`RunResult`]: everything deterministic under
/// (config, dataset). Wall-clock fields are deliberately absent so that runs
/// with different worker counts serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub config: RunConfig,
    pub dataset: String,
    pub generations: Vec<GenerationSummary>,
    pub best_pipeline: String,
    pub best_selection_accuracy: f64,
    pub best_complexity: u64,
    pub test_accuracy: f64,
    pub test_complexity: u64,
    pub total_fit_calls: u64,
}

impl RunResult {
    pub fn document(&self) -> RunDocument {
        RunDocument {
            config: self.config.clone(),
            dataset: self.dataset.clone(),
            generations: self.generations.clone(),
            best_pipeline: dump(&self.best.graph),
            best_selection_accuracy: self.best.selection_accuracy,
            best_complexity: self.best.complexity,
            test_accuracy: self.test_accuracy,
            test_complexity: self.test_complexity,
            total_fit_calls: self.total_fit_calls,
        }
    }
}

/// The per-run evaluation fixture: built once on the training subset and
/// reused by every evaluation of the run.
enum Fixture {
    Lexidate(SplitPair),
    Cv(FoldSet),
}

impl Fixture {
    fn build(
        strategy: &StrategyConfig,
        train: &Dataset,
        seed: u64,
    ) -> Result<Fixture, DatasetError> {
        let mut rng = stream(seed, purpose::STRATEGY_SPLIT, 0, 0);
        match strategy {
            StrategyConfig::Lexidate { learn_fraction } => Ok(Fixture::Lexidate(
                stratified_split(train, *learn_fraction, &mut rng)?,
            )),
            StrategyConfig::Cv { folds } => {
                Ok(Fixture::Cv(stratified_kfold(train, *folds, &mut rng)?))
            }
        }
    }

    fn evaluate(
        &self,
        train: &Dataset,
        graph: &PipelineGraph,
        time_limit: Duration,
    ) -> EvaluationRecord {
        match self {
            Fixture::Lexidate(split) => evaluate_lexidate(train, split, graph, time_limit),
            Fixture::Cv(folds) => evaluate_cv(train, folds, graph, time_limit),
        }
    }
}

/// Executes a full evolutionary run. See the module docs for the loop shape;
/// the final generation is evaluated and archived but produces no offspring.
pub fn run(config: &RunConfig, ds: &Dataset) -> Result<RunResult, RunError> {
    config.validate()?;
    let seed = config.seed;

    let outer = stratified_split(
        ds,
        1.0 - config.test_fraction,
        &mut stream(seed, purpose::OUTER_SPLIT, 0, 0),
    )?;
    let train = ds.subset(&outer.learning);
    let test = ds.subset(&outer.selection);

    let fixture = Fixture::build(&config.strategy, &train, seed)?;
    let time_limit = Duration::from_secs_f64(config.time_limit);

    let mut population: Vec<PipelineGraph> = (0..config.pop_size)
        .map(|i| random_pipeline(config.max_nodes, &mut stream(seed, purpose::INIT, 0, i as u64)))
        .collect();

    let mut archive: Vec<EvaluationRecord> = Vec::new();
    let mut summaries: Vec<GenerationSummary> = Vec::new();

    for generation in 0..config.generations {
        let records: Vec<EvaluationRecord> = population
            .par_iter()
            .map(|graph| fixture.evaluate(&train, graph, time_limit))
            .collect();

        let valid = records.iter().filter(|r| r.valid).count();
        if valid == 0 {
            return Err(RunError::AllInvalid { generation });
        }
        let accuracies: Vec<f64> = records
            .iter()
            .filter(|r| r.valid)
            .map(|r| r.selection_accuracy)
            .collect();
        summaries.push(GenerationSummary {
            generation,
            valid,
            best_selection_accuracy: accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_selection_accuracy: accuracies.iter().sum::<f64>() / accuracies.len() as f64,
        });
        archive.extend(records.iter().cloned());

        if generation + 1 == config.generations {
            break;
        }

        let matrix = assemble_matrix(&records, config.strategy.kind())?;
        let parents = select_parents(
            &matrix,
            config.pop_size,
            &mut stream(seed, purpose::SELECT, generation as u64, 0),
        )?;
        population = parents
            .iter()
            .enumerate()
            .map(|(i, &parent)| {
                let graph = &population[parent];
                if config.mutate_offspring {
                    crate::pipeline::mutate(
                        graph,
                        &mut stream(seed, purpose::MUTATE, generation as u64, i as u64),
                    )
                } else {
                    graph.clone()
                }
            })
            .collect();
    }

    // Winner: best accuracy, then lowest complexity, over the whole archive.
    let candidates: Vec<usize> = (0..archive.len()).filter(|&i| archive[i].valid).collect();
    let pairs: Vec<(f64, u64)> = candidates
        .iter()
        .map(|&i| (archive[i].selection_accuracy, archive[i].complexity))
        .collect();
    let chosen = best_record(&pairs, &mut stream(seed, purpose::BEST, 0, 0))?;
    let best = archive[candidates[chosen]].clone();

    // Refit the winner on the full training subset (no deadline) and score
    // it once on the held-out test subset.
    let all_train: Vec<usize> = (0..train.n_samples()).collect();
    let (tx, ty) = train.select_xy(&all_train);
    let fitted = fit_pipeline(&best.graph, &tx, &ty).map_err(RunError::FinalRefit)?;
    let all_test: Vec<usize> = (0..test.n_samples()).collect();
    let (ex, ey) = test.select_xy(&all_test);
    let predictions = predict_pipeline(&fitted, &ex).map_err(RunError::FinalRefit)?;
    let grades = grade(&predictions, &ey)?;

    let total_fit_calls = archive.iter().map(|r| r.fit_calls).sum();
    Ok(RunResult {
        config: config.clone(),
        dataset: ds.name.clone(),
        archive,
        generations: summaries,
        best,
        test_accuracy: grade_mean(&grades),
        test_complexity: fitted.complexity(),
        total_fit_calls,
    })
}

/// Fit-call accounting for a completed run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitCallLedger {
    pub strategy: String,
    pub total_fit_calls: u64,
    pub evaluations: u64,
    pub fits_per_pipeline_evaluation: f64,
}

pub fn fit_call_ledger(result: &RunResult) -> FitCallLedger {
    let evaluations = result.archive.len() as u64;
    FitCallLedger {
        strategy: result.config.strategy.label(),
        total_fit_calls: result.total_fit_calls,
        evaluations,
        fits_per_pipeline_evaluation: result.total_fit_calls as f64 / evaluations as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthetic;

    fn small_config(strategy: StrategyConfig, seed: u64) -> RunConfig {
        let mut config = RunConfig::new(strategy, seed);
        config.pop_size = 6;
        config.generations = 3;
        config.max_nodes = 3;
        config.time_limit = 60.0;
        config
    }

    #[test]
    fn defaults_follow_the_experimental_design() {
        let config = RunConfig::new(StrategyConfig::Cv { folds: 10 }, 1);
        assert_eq!(config.pop_size, 48);
        assert_eq!(config.max_nodes, 10);
        assert_eq!(config.generations, 200);
        assert_eq!(config.test_fraction, 0.25);
        assert!(config.mutate_offspring);
    }

    #[test]
    fn config_validation_rejects_out_of_range_fields() {
        let base = RunConfig::new(StrategyConfig::Lexidate { learn_fraction: 0.9 }, 1);
        for breakage in [
            |c: &mut RunConfig| c.pop_size = 0,
            |c: &mut RunConfig| c.max_nodes = 0,
            |c: &mut RunConfig| c.generations = 0,
            |c: &mut RunConfig| c.time_limit = 0.0,
            |c: &mut RunConfig| c.time_limit = f64::NAN,
            |c: &mut RunConfig| c.test_fraction = 1.0,
            |c: &mut RunConfig| c.strategy = StrategyConfig::Lexidate { learn_fraction: 1.0 },
            |c: &mut RunConfig| c.strategy = StrategyConfig::Cv { folds: 1 },
        ] {
            let mut config = base.clone();
            breakage(&mut config);
            assert!(
                matches!(config.validate(), Err(RunError::Config(_))),
                "accepted {config:?}"
            );
        }
        assert!(base.validate().is_ok());
    }

    #[test]
    fn one_generation_archives_exactly_pop_size_records() {
        let ds = synthetic(&[30, 30]);
        let mut config = small_config(StrategyConfig::Lexidate { learn_fraction: 0.8 }, 7);
        config.pop_size = 4;
        config.generations = 1;
        let result = run(&config, &ds).unwrap();
        assert_eq!(result.archive.len(), 4);
        assert_eq!(result.generations.len(), 1);
        assert_eq!(result.generations[0].generation, 0);
        assert!(result.generations[0].valid >= 1);
    }

    #[test]
    fn archive_grows_by_pop_size_each_generation() {
        let ds = synthetic(&[30, 30]);
        let config = small_config(StrategyConfig::Cv { folds: 3 }, 11);
        let result = run(&config, &ds).unwrap();
        assert_eq!(result.archive.len(), 18); // 6 x 3
        assert_eq!(result.generations.len(), 3);
        let ledger = fit_call_ledger(&result);
        assert_eq!(ledger.evaluations, 18);
    }

    #[test]
    fn vanishing_time_limit_aborts_in_generation_zero() {
        let ds = synthetic(&[30, 30]);
        let mut config = small_config(StrategyConfig::Lexidate { learn_fraction: 0.8 }, 3);
        config.time_limit = 1e-9;
        match run(&config, &ds) {
            Err(RunError::AllInvalid { generation: 0 }) => {}
            other => panic!("expected AllInvalid at generation 0, got {other:?}"),
        }
    }

    #[test]
    fn reruns_reproduce_bit_for_bit() {
        let ds = synthetic(&[25, 25]);
        let config = small_config(StrategyConfig::Lexidate { learn_fraction: 0.7 }, 99);
        let a = run(&config, &ds).unwrap().document();
        let b = run(&config, &ds).unwrap().document();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn worker_count_does_not_change_the_document() {
        let ds = synthetic(&[25, 25]);
        let config = small_config(StrategyConfig::Cv { folds: 3 }, 5);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run(&config, &ds))
            .unwrap()
            .document();
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run(&config, &ds))
            .unwrap()
            .document();
        assert_eq!(
            serde_json::to_string(&serial).unwrap(),
            serde_json::to_string(&parallel).unwrap()
        );
    }

    #[test]
    fn single_node_ledgers_count_one_fit_per_evaluation() {
        let ds = synthetic(&[40, 40]);
        let mut config = small_config(StrategyConfig::Lexidate { learn_fraction: 0.9 }, 13);
        config.max_nodes = 1;
        let result = run(&config, &ds).unwrap();
        let ledger = fit_call_ledger(&result);
        assert_eq!(ledger.fits_per_pipeline_evaluation, 1.0);

        config.strategy = StrategyConfig::Cv { folds: 10 };
        let result = run(&config, &ds).unwrap();
        let ledger = fit_call_ledger(&result);
        assert_eq!(ledger.fits_per_pipeline_evaluation, 10.0);
    }

    #[test]
    fn cv_costs_exactly_tenfold_on_a_pinned_pipeline_sequence() {
        // pop_size 1 with mutation disabled keeps one pipeline for the whole
        // run, and the same seed produces the same initial pipeline under
        // both strategies, so the fit-call ratio is exactly the fold count.
        let ds = synthetic(&[40, 40]);
        let mut config = small_config(StrategyConfig::Lexidate { learn_fraction: 0.9 }, 21);
        config.pop_size = 1;
        config.generations = 5;
        config.mutate_offspring = false;
        let lexidate = run(&config, &ds).unwrap();

        config.strategy = StrategyConfig::Cv { folds: 10 };
        let cv = run(&config, &ds).unwrap();

        // identical pipeline sequences...
        let dumps = |r: &RunResult| -> Vec<String> {
            r.archive.iter().map(|rec| dump(&rec.graph)).collect()
        };
        assert_eq!(dumps(&lexidate), dumps(&cv));
        // ...and a factor-of-k fit bill
        assert_eq!(cv.total_fit_calls, 10 * lexidate.total_fit_calls);
    }

    #[test]
    fn separable_clusters_beat_the_majority_baseline() {
        use crate::matrix::Matrix;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let jitter = (i % 10) as f64 * 0.05;
            if i % 3 == 0 {
                rows.push(vec![8.0 + jitter, 9.0 - jitter]);
                labels.push(1);
            } else {
                rows.push(vec![0.0 + jitter, 1.0 - jitter]);
                labels.push(0);
            }
        }
        let ds = Dataset::from_parts(
            "clusters",
            Matrix::from_rows(&rows),
            labels,
            vec!["near".into(), "far".into()],
        )
        .unwrap();
        let config = small_config(StrategyConfig::Lexidate { learn_fraction: 0.7 }, 4);
        let result = run(&config, &ds).unwrap();
        // test subset inherits the 2:1 imbalance, so the majority baseline
        // is about 2/3; separable clusters must beat it
        assert!(
            result.test_accuracy > 0.67,
            "test accuracy {}",
            result.test_accuracy
        );
        assert!(result.best.valid);
        assert!(result.total_fit_calls > 0);
    }

    #[test]
    fn document_round_trips_through_json() {
        let ds = synthetic(&[20, 20]);
        let config = small_config(StrategyConfig::Cv { folds: 2 }, 17);
        let doc = run(&config, &ds).unwrap().document();
        let json = serde_json::to_string_pretty(&doc).unwrap();
        let back: RunDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(doc, back);
        assert!(!json.contains("wall_time"));
    }
}
