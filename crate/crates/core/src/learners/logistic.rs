//! Logistic regression via full-batch gradient descent with a bias term and
//! optional L2 penalty (bias unpenalized). Multiclass problems train one
//! binary model per class (one-vs-rest).

use super::{distinct_classes, LearnedState, LearnerSpec};
use crate::dataset::Label;
use crate::matrix::Matrix;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Raw decision value for one weight row (bias stored last).
fn decision(w: &[f64], row: &[f64]) -> f64 {
    let d = w.len() - 1;
    let mut z = w[d];
    for j in 0..d {
        z += w[j] * row[j];
    }
    z
}

fn fit_one_vs(x: &Matrix, targets: &[f64], lr: f64, iters: usize, l2: f64) -> Vec<f64> {
    let d = x.n_cols();
    let n = x.n_rows() as f64;
    let mut w = vec![0.0; d + 1];
    let mut grad = vec![0.0; d + 1];
    for _ in 0..iters {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (i, row) in x.rows_iter().enumerate() {
            let err = sigmoid(decision(&w, row)) - targets[i];
            for j in 0..d {
                grad[j] += err * row[j];
            }
            grad[d] += err;
        }
        for j in 0..d {
            w[j] -= lr * (grad[j] / n + l2 * w[j]);
        }
        w[d] -= lr * grad[d] / n;
    }
    w
}

pub(super) fn fit(spec: &LearnerSpec, x: &Matrix, y: &[Label]) -> LearnedState {
    let classes = distinct_classes(y);
    if classes.len() == 1 {
        // Nothing to discriminate; degenerate constant predictor.
        return LearnedState::LogisticConstant { label: classes[0] };
    }
    let lr = spec.float("learning_rate");
    let iters = spec.int("iterations") as usize;
    let l2 = spec.float("l2");

    let weights = if classes.len() == 2 {
        let targets: Vec<f64> = y
            .iter()
            .map(|&l| if l == classes[1] { 1.0 } else { 0.0 })
            .collect();
        vec![fit_one_vs(x, &targets, lr, iters, l2)]
    } else {
        classes
            .iter()
            .map(|&c| {
                let targets: Vec<f64> =
                    y.iter().map(|&l| if l == c { 1.0 } else { 0.0 }).collect();
                fit_one_vs(x, &targets, lr, iters, l2)
            })
            .collect()
    };
    LearnedState::Logistic { classes, weights }
}

pub(super) fn predict(classes: &[Label], weights: &[Vec<f64>], x: &Matrix) -> Vec<Label> {
    x.rows_iter()
        .map(|row| {
            if weights.len() == 1 {
                // Binary: positive decision value means the higher class;
                // an exact zero falls to the lower class.
                if decision(&weights[0], row) > 0.0 {
                    classes[1]
                } else {
                    classes[0]
                }
            } else {
                // One-vs-rest: highest decision value wins, ties to the
                // lower class index.
                let mut best = 0;
                let mut best_z = decision(&weights[0], row);
                for (c, w) in weights.iter().enumerate().skip(1) {
                    let z = decision(w, row);
                    if z > best_z {
                        best = c;
                        best_z = z;
                    }
                }
                classes[best]
            }
        })
        .collect()
}
