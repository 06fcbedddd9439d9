//! Univariate feature selection: keep the k features with the highest
//! one-way ANOVA F-score against the class labels.

use super::LearnedState;
use crate::dataset::Label;
use crate::matrix::Matrix;

/// F-score of one feature column. Conventions for degenerate inputs: fewer
/// than two classes or zero between-class variation score 0; zero
/// within-class variation with real between-class variation scores infinite
/// (perfectly separating feature).
fn f_score(x: &Matrix, col: usize, groups: &[Vec<usize>]) -> f64 {
    let present: Vec<&Vec<usize>> = groups.iter().filter(|g| !g.is_empty()).collect();
    let c = present.len();
    let n: usize = present.iter().map(|g| g.len()).sum();
    if c < 2 {
        return 0.0;
    }

    let grand_mean = present
        .iter()
        .flat_map(|g| g.iter())
        .map(|&i| x.get(i, col))
        .sum::<f64>()
        / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in &present {
        let mean = g.iter().map(|&i| x.get(i, col)).sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (mean - grand_mean) * (mean - grand_mean);
        ss_within += g
            .iter()
            .map(|&i| {
                let d = x.get(i, col) - mean;
                d * d
            })
            .sum::<f64>();
    }

    if ss_between == 0.0 {
        return 0.0;
    }
    if ss_within == 0.0 || n == c {
        return f64::INFINITY;
    }
    (ss_between / (c - 1) as f64) / (ss_within / (n - c) as f64)
}

pub(super) fn fit(k: i64, x: &Matrix, y: &[Label]) -> LearnedState {
    let d = x.n_cols();
    let k = (k.max(1) as usize).min(d);

    let max_label = y.iter().copied().max().unwrap_or(0) as usize;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); max_label + 1];
    for (i, &l) in y.iter().enumerate() {
        groups[l as usize].push(i);
    }

    let scores: Vec<f64> = (0..d).map(|col| f_score(x, col, &groups)).collect();
    let mut ranked: Vec<usize> = (0..d).collect();
    // Highest score first; equal scores prefer the lower feature index.
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut indices: Vec<usize> = ranked[..k].to_vec();
    indices.sort_unstable();
    LearnedState::SelectK { indices }
}
