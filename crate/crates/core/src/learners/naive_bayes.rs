//! Gaussian naive Bayes: per class a prior plus one (mean, variance) pair per
//! feature. Variances are floored to keep log-densities finite on constant
//! features.

use super::{distinct_classes, LearnedState};
use crate::dataset::Label;
use crate::matrix::Matrix;

const VARIANCE_FLOOR: f64 = 1e-9;

pub(super) fn fit(x: &Matrix, y: &[Label]) -> LearnedState {
    let classes = distinct_classes(y);
    let d = x.n_cols();
    let n = x.n_rows() as f64;

    let mut priors = Vec::with_capacity(classes.len());
    let mut means = Vec::with_capacity(classes.len());
    let mut variances = Vec::with_capacity(classes.len());
    for &c in &classes {
        let rows: Vec<usize> = y
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == c)
            .map(|(i, _)| i)
            .collect();
        let nc = rows.len() as f64;
        priors.push(nc / n);

        let mut mean = vec![0.0; d];
        for &i in &rows {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= nc;
        }

        let mut var = vec![0.0; d];
        for &i in &rows {
            for (s, (v, m)) in var.iter_mut().zip(x.row(i).iter().zip(&mean)) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut var {
            *s = (*s / nc).max(VARIANCE_FLOOR);
        }

        means.push(mean);
        variances.push(var);
    }
    LearnedState::Gaussian {
        classes,
        priors,
        means,
        variances,
    }
}

pub(super) fn predict(
    classes: &[Label],
    priors: &[f64],
    means: &[Vec<f64>],
    variances: &[Vec<f64>],
    x: &Matrix,
) -> Vec<Label> {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    x.rows_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for c in 0..classes.len() {
                let mut score = priors[c].ln();
                for (j, &v) in row.iter().enumerate() {
                    let mu = means[c][j];
                    let var = variances[c][j];
                    score -= 0.5 * (ln_2pi + var.ln()) + (v - mu) * (v - mu) / (2.0 * var);
                }
                // Strict > keeps the lower class index on exact ties.
                if score > best_score {
                    best = c;
                    best_score = score;
                }
            }
            classes[best]
        })
        .collect()
}
