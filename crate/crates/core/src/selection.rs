//! Lexicase parent selection and the end-of-run best-pipeline filter.
//!
//! Lexicase shuffles the objectives, then repeatedly keeps only the pool
//! members that achieve the pool-best value (exact equality) on the next
//! objective; one of the survivors is returned uniformly.
//! [`selection_distribution`] computes the exact selection law by enumerating
//! every objective ordering, which the sampling implementation is tested
//! against.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("objective matrix needs at least one objective")]
    NoObjectives,
    #[error("{rows} score rows but {mask} validity entries")]
    MaskMismatch { rows: usize, mask: usize },
    #[error("row {row} has {got} objectives, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("valid row {row} contains a non-finite score")]
    NonFiniteScore { row: usize },
    #[error("no valid individuals to select from")]
    NoValidIndividuals,
    #[error("{0} objectives exceed the exact-enumeration limit of 8")]
    TooManyObjectives(usize),
    #[error("empty record list")]
    EmptyRecords,
}

/// Scores for a population: one row per individual, one column per objective.
/// Rows flagged invalid are carried for bookkeeping but never selected.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveMatrix {
    scores: Vec<Vec<f64>>,
    directions: Vec<Direction>,
    valid_mask: Vec<bool>,
}

impl ObjectiveMatrix {
    pub fn new(
        scores: Vec<Vec<f64>>,
        directions: Vec<Direction>,
        valid_mask: Vec<bool>,
    ) -> Result<Self, SelectionError> {
        if directions.is_empty() {
            return Err(SelectionError::NoObjectives);
        }
        if scores.len() != valid_mask.len() {
            return Err(SelectionError::MaskMismatch {
                rows: scores.len(),
                mask: valid_mask.len(),
            });
        }
        for (row, values) in scores.iter().enumerate() {
            if values.len() != directions.len() {
                return Err(SelectionError::RaggedRow {
                    row,
                    got: values.len(),
                    expected: directions.len(),
                });
            }
            if valid_mask[row] && values.iter().any(|v| !v.is_finite()) {
                return Err(SelectionError::NonFiniteScore { row });
            }
        }
        Ok(ObjectiveMatrix {
            scores,
            directions,
            valid_mask,
        })
    }

    pub fn n_individuals(&self) -> usize {
        self.scores.len()
    }

    pub fn n_objectives(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn is_valid(&self, row: usize) -> bool {
        self.valid_mask[row]
    }

    pub fn score(&self, row: usize, objective: usize) -> f64 {
        self.scores[row][objective]
    }

    fn valid_indices(&self) -> Vec<usize> {
        (0..self.scores.len())
            .filter(|&i| self.valid_mask[i])
            .collect()
    }

    /// Keeps the pool members achieving the pool-best value on `objective`.
    fn filter_pool_best(&self, pool: &mut Vec<usize>, objective: usize) {
        let best = pool
            .iter()
            .map(|&i| self.scores[i][objective])
            .fold(f64::NAN, |acc, v| match self.directions[objective] {
                Direction::Maximize => if acc.is_nan() || v > acc { v } else { acc },
                Direction::Minimize => if acc.is_nan() || v < acc { v } else { acc },
            });
        pool.retain(|&i| self.scores[i][objective] == best);
    }
}

/// One lexicase draw: shuffle objectives, filter to pool-best per objective,
/// return a uniform survivor.
pub fn lexicase_select<R: Rng + ?Sized>(
    m: &ObjectiveMatrix,
    rng: &mut R,
) -> Result<usize, SelectionError> {
    let mut pool = m.valid_indices();
    if pool.is_empty() {
        return Err(SelectionError::NoValidIndividuals);
    }
    let mut order: Vec<usize> = (0..m.n_objectives()).collect();
    order.shuffle(rng);
    for &objective in &order {
        m.filter_pool_best(&mut pool, objective);
    }
    Ok(pool[rng.gen_range(0..pool.len())])
}

fn for_each_permutation(k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(items: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
        if start == items.len() {
            f(items);
            return;
        }
        for i in start..items.len() {
            items.swap(start, i);
            go(items, start + 1, f);
            items.swap(start, i);
        }
    }
    let mut items: Vec<usize> = (0..k).collect();
    go(&mut items, 0, f);
}

/// The exact probability that each individual is returned by
/// [`lexicase_select`], computed by enumerating all `n_objectives!` orderings
/// and averaging the uniform-survivor distribution of each.
pub fn selection_distribution(m: &ObjectiveMatrix) -> Result<Vec<f64>, SelectionError> {
    if m.n_objectives() > 8 {
        return Err(SelectionError::TooManyObjectives(m.n_objectives()));
    }
    let base = m.valid_indices();
    if base.is_empty() {
        return Err(SelectionError::NoValidIndividuals);
    }

    let mut probs = vec![0.0; m.n_individuals()];
    let mut orderings = 0u64;
    for_each_permutation(m.n_objectives(), &mut |perm| {
        let mut pool = base.clone();
        for &objective in perm {
            // Independent re-derivation of the filter: find the best value,
            // then keep its achievers.
            let mut best = m.scores[pool[0]][objective];
            for &i in &pool[1..] {
                let v = m.scores[i][objective];
                let better = match m.directions[objective] {
                    Direction::Maximize => v > best,
                    Direction::Minimize => v < best,
                };
                if better {
                    best = v;
                }
            }
            pool = pool
                .into_iter()
                .filter(|&i| m.scores[i][objective] == best)
                .collect();
        }
        let share = 1.0 / pool.len() as f64;
        for &i in &pool {
            probs[i] += share;
        }
        orderings += 1;
    });
    for p in &mut probs {
        *p /= orderings as f64;
    }
    Ok(probs)
}

/// `count` independent lexicase draws, with replacement.
pub fn select_parents<R: Rng + ?Sized>(
    m: &ObjectiveMatrix,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>, SelectionError> {
    (0..count).map(|_| lexicase_select(m, rng)).collect()
}

/// End-of-run filter over (accuracy, complexity) records: keep the records
/// with the highest accuracy (exact equality), among those the lowest
/// complexity, then pick uniformly.
pub fn best_record<R: Rng + ?Sized>(
    records: &[(f64, u64)],
    rng: &mut R,
) -> Result<usize, SelectionError> {
    if records.is_empty() {
        return Err(SelectionError::EmptyRecords);
    }
    let best_acc = records
        .iter()
        .map(|&(acc, _)| acc)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut pool: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].0 == best_acc)
        .collect();
    let min_complexity = pool.iter().map(|&i| records[i].1).min().unwrap();
    pool.retain(|&i| records[i].1 == min_complexity);
    Ok(pool[rng.gen_range(0..pool.len())])
}
