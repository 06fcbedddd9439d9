//! k-nearest-neighbors: memorizes the training set and votes among the k
//! nearest rows by Euclidean distance. Distance ties prefer the lower
//! training index, vote ties the lower class index. The stored training set
//! is what the complexity rule counts: n·(d+1) scalars.

use super::LearnedState;
use crate::dataset::Label;
use crate::matrix::Matrix;
use std::collections::BTreeMap;

pub(super) fn fit(x: &Matrix, y: &[Label]) -> LearnedState {
    LearnedState::Nearest {
        features: x.clone(),
        labels: y.to_vec(),
    }
}

pub(super) fn predict(k: i64, features: &Matrix, labels: &[Label], x: &Matrix) -> Vec<Label> {
    let k = (k.max(1) as usize).min(features.n_rows());
    x.rows_iter()
        .map(|query| {
            let mut dists: Vec<(f64, usize)> = features
                .rows_iter()
                .enumerate()
                .map(|(i, train)| {
                    let d2: f64 = query
                        .iter()
                        .zip(train)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d2, i)
                })
                .collect();
            dists.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let mut votes: BTreeMap<Label, usize> = BTreeMap::new();
            for &(_, i) in dists.iter().take(k) {
                *votes.entry(labels[i]).or_insert(0) += 1;
            }
            // BTreeMap iterates labels ascending, so > keeps the lowest
            // class among equal vote counts.
            let mut best = (Label::MAX, 0usize);
            for (&label, &count) in &votes {
                if count > best.1 {
                    best = (label, count);
                }
            }
            best.0
        })
        .collect()
}
