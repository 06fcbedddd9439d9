//! Model evaluation strategies and the objective matrices they produce.
//!
//! Two strategies are implemented over the same training subset:
//!
//! * **lexidate** ([`evaluate_lexidate`]): split the training subset into
//!   learning and selection rows, fit the pipeline once on the learning rows,
//!   then grade each selection row 0/1. Every per-sample grade becomes its
//!   own objective, which is what gives lexicase something to chew on.
//!   Complexity is recorded on the side but is *not* an objective.
//! * **cross-validation** ([`evaluate_cv`]): fit once per fold on the fold's
//!   complement and score the held-out fold. Two aggregate objectives: mean
//!   fold accuracy (maximized) and mean complexity (minimized).
//!
//! Evaluations never panic on bad pipelines or timeouts; they return a record
//! flagged invalid that still accounts for the learner fits it consumed.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::dataset::{Dataset, FoldSet, Label, SplitPair};
use crate::pipeline::{fit_pipeline_deadline, predict_pipeline, PipelineGraph};
use crate::selection::{Direction, ObjectiveMatrix, SelectionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// Learning/selection split with per-sample grade objectives.
    Lexidate,
    /// Stratified k-fold cross-validation with aggregate objectives.
    CrossValidation,
}

/// Outcome of evaluating one pipeline. `objectives` is empty when the record
/// is invalid (failed fit, timeout, structural violation).
#[derive(Debug, Clone)]
pub struct EvaluationRecord {
    pub graph: PipelineGraph,
    pub valid: bool,
    pub objectives: Vec<f64>,
    /// Accuracy on the data the strategy scored against (selection rows or
    /// held-out folds). Zero for invalid records.
    pub selection_accuracy: f64,
    /// Trainable-parameter count; for cross-validation the per-fold counts
    /// are averaged and rounded half-up.
    pub complexity: u64,
    /// Learner fits consumed, including attempts that failed.
    pub fit_calls: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Error, PartialEq)]
pub enum EvaluationError {
    #[error("{predictions} predictions for {truth} labels")]
    GradeLengthMismatch { predictions: usize, truth: usize },
    #[error("no valid evaluation records to assemble")]
    NoValidRecords,
    #[error("record {row} has {got} objectives, expected {expected}")]
    MixedObjectiveLengths {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("valid record {row} carries no objectives")]
    EmptyObjectives { row: usize },
    #[error(transparent)]
    Matrix(#[from] SelectionError),
}

/// Per-sample 0/1 grades: 1 where the prediction matches the truth.
pub fn grade(predictions: &[Label], truth: &[Label]) -> Result<Vec<u8>, EvaluationError> {
    if predictions.len() != truth.len() {
        return Err(EvaluationError::GradeLengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    Ok(predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| u8::from(p == t))
        .collect())
}

pub fn grade_mean(grades: &[u8]) -> f64 {
    if grades.is_empty() {
        return 0.0;
    }
    grades.iter().map(|&g| g as f64).sum::<f64>() / grades.len() as f64
}

fn invalid_record(graph: &PipelineGraph, fit_calls: u64, start: Instant) -> EvaluationRecord {
    EvaluationRecord {
        graph: graph.clone(),
        valid: false,
        objectives: Vec::new(),
        selection_accuracy: 0.0,
        complexity: 0,
        fit_calls,
        wall_time: start.elapsed(),
    }
}

fn deadline_from(start: Instant, time_limit: Duration) -> Option<Instant> {
    // An unrepresentable deadline (absurdly large limit) means "no deadline".
    start.checked_add(time_limit)
}

/// Evaluates `graph` under the learn/select strategy: one fit on the learning
/// rows, one grade per selection row.
pub fn evaluate_lexidate(
    train: &Dataset,
    split: &SplitPair,
    graph: &PipelineGraph,
    time_limit: Duration,
) -> EvaluationRecord {
    let start = Instant::now();
    let deadline = deadline_from(start, time_limit);

    let (lx, ly) = train.select_xy(&split.learning);
    let fitted = match fit_pipeline_deadline(graph, &lx, &ly, deadline) {
        Ok(fp) => fp,
        Err(e) => return invalid_record(graph, e.fits_performed(), start),
    };
    let fit_calls = graph.len() as u64;

    let (sx, sy) = train.select_xy(&split.selection);
    let predictions = match predict_pipeline(&fitted, &sx) {
        Ok(p) => p,
        Err(_) => return invalid_record(graph, fit_calls, start),
    };
    let grades = grade(&predictions, &sy).expect("one prediction per selection row");

    EvaluationRecord {
        graph: graph.clone(),
        valid: true,
        objectives: grades.iter().map(|&g| g as f64).collect(),
        selection_accuracy: grade_mean(&grades),
        complexity: fitted.complexity(),
        fit_calls,
        wall_time: start.elapsed(),
    }
}

/// Round half-up for non-negative values: 1.5 → 2, 2.5 → 3.
fn round_half_up(x: f64) -> u64 {
    debug_assert!(x >= 0.0);
    (x + 0.5).floor() as u64
}

/// Evaluates `graph` under stratified k-fold cross-validation: one fit per
/// fold on its complement, scored on the held-out fold. The deadline covers
/// the whole evaluation, not each fold separately.
pub fn evaluate_cv(
    train: &Dataset,
    folds: &FoldSet,
    graph: &PipelineGraph,
    time_limit: Duration,
) -> EvaluationRecord {
    let start = Instant::now();
    let deadline = deadline_from(start, time_limit);
    let k = folds.k();

    let mut fits: u64 = 0;
    let mut fold_accuracies = Vec::with_capacity(k);
    let mut fold_complexities = Vec::with_capacity(k);
    for fold in 0..k {
        let (tx, ty) = train.select_xy(&folds.train_for(fold));
        let fitted = match fit_pipeline_deadline(graph, &tx, &ty, deadline) {
            Ok(fp) => fp,
            Err(e) => return invalid_record(graph, fits + e.fits_performed(), start),
        };
        fits += graph.len() as u64;

        let (vx, vy) = train.select_xy(&folds.folds[fold]);
        let predictions = match predict_pipeline(&fitted, &vx) {
            Ok(p) => p,
            Err(_) => return invalid_record(graph, fits, start),
        };
        let grades = grade(&predictions, &vy).expect("one prediction per held-out row");
        fold_accuracies.push(grade_mean(&grades));
        fold_complexities.push(fitted.complexity());
    }

    let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
    let mean_complexity =
        fold_complexities.iter().map(|&c| c as f64).sum::<f64>() / k as f64;

    EvaluationRecord {
        graph: graph.clone(),
        valid: true,
        objectives: vec![mean_accuracy, mean_complexity],
        selection_accuracy: mean_accuracy,
        complexity: round_half_up(mean_complexity),
        fit_calls: fits,
        wall_time: start.elapsed(),
    }
}

/// Stacks a population's records into an [`ObjectiveMatrix`] for selection.
/// Invalid records become all-zero placeholder rows with the validity mask
/// cleared, so indices line up with the population.
pub fn assemble_matrix(
    records: &[EvaluationRecord],
    strategy: StrategyKind,
) -> Result<ObjectiveMatrix, EvaluationError> {
    let mut expected: Option<usize> = None;
    for (row, rec) in records.iter().enumerate() {
        if !rec.valid {
            continue;
        }
        if rec.objectives.is_empty() {
            return Err(EvaluationError::EmptyObjectives { row });
        }
        match expected {
            None => expected = Some(rec.objectives.len()),
            Some(len) if rec.objectives.len() != len => {
                return Err(EvaluationError::MixedObjectiveLengths {
                    row,
                    got: rec.objectives.len(),
                    expected: len,
                });
            }
            Some(_) => {}
        }
    }
    let width = expected.ok_or(EvaluationError::NoValidRecords)?;

    let directions = match strategy {
        StrategyKind::Lexidate => vec![Direction::Maximize; width],
        StrategyKind::CrossValidation => {
            if width != 2 {
                return Err(EvaluationError::MixedObjectiveLengths {
                    row: 0,
                    got: width,
                    expected: 2,
                });
            }
            vec![Direction::Maximize, Direction::Minimize]
        }
    };

    let scores: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            if r.valid {
                r.objectives.clone()
            } else {
                vec![0.0; width]
            }
        })
        .collect();
    let mask: Vec<bool> = records.iter().map(|r| r.valid).collect();
    Ok(ObjectiveMatrix::new(scores, directions, mask)?)
}
