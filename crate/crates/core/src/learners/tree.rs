//! CART-style decision tree with Gini impurity. Thresholds are scanned at
//! midpoints of sorted distinct feature values; leaves predict the majority
//! class with ties broken toward the lower class index. Everything is
//! deterministic, so a brute-force oracle can re-derive the chosen splits.

use super::LearnedState;
use crate::dataset::Label;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Index into the node arena; rows with value <= threshold go left.
        left: usize,
        right: usize,
    },
    Leaf {
        label: Label,
    },
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [Label],
    max_depth: usize,
    nodes: Vec<TreeNode>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

impl<'a> Builder<'a> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let max_label = idx.iter().map(|&i| self.y[i]).max().unwrap() as usize;
        let mut counts = vec![0usize; max_label + 1];
        for &i in idx {
            counts[self.y[i] as usize] += 1;
        }
        counts
    }

    fn majority(counts: &[usize]) -> Label {
        let mut best = 0usize;
        for (label, &c) in counts.iter().enumerate() {
            if c > counts[best] {
                best = label;
            }
        }
        best as Label
    }

    /// Best (feature, threshold, weighted child gini) over all midpoint
    /// candidates, or None when every feature is constant on `idx`. Ties keep
    /// the first candidate found (lower feature, then lower threshold).
    fn best_split(&self, idx: &[usize]) -> Option<(usize, f64, f64)> {
        let n = idx.len();
        let mut best: Option<(usize, f64, f64)> = None;
        for feature in 0..self.x.n_cols() {
            let mut order: Vec<usize> = idx.to_vec();
            order.sort_by(|&a, &b| self.x.get(a, feature).total_cmp(&self.x.get(b, feature)));

            let total = self.counts(idx);
            let mut left = vec![0usize; total.len()];
            let mut n_left = 0usize;
            for w in 0..n - 1 {
                let i = order[w];
                left[self.y[i] as usize] += 1;
                n_left += 1;
                let lo = self.x.get(i, feature);
                let hi = self.x.get(order[w + 1], feature);
                if hi <= lo {
                    continue; // same value, no boundary here
                }
                let threshold = (lo + hi) / 2.0;
                let right: Vec<usize> = total
                    .iter()
                    .zip(&left)
                    .map(|(&t, &l)| t - l)
                    .collect();
                let n_right = n - n_left;
                let weighted = (n_left as f64 * gini(&left, n_left)
                    + n_right as f64 * gini(&right, n_right))
                    / n as f64;
                if best.is_none() || weighted < best.unwrap().2 {
                    best = Some((feature, threshold, weighted));
                }
            }
        }
        best
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let majority = Self::majority(&counts);
        let impurity = gini(&counts, idx.len());

        if depth < self.max_depth && impurity > 0.0 {
            // Split only on a strict impurity improvement; zero-gain splits
            // would inflate complexity without changing any prediction.
            if let Some((feature, threshold, weighted)) = self.best_split(idx) {
                if weighted < impurity - 1e-12 {
                    let (lhs, rhs): (Vec<usize>, Vec<usize>) = idx
                        .iter()
                        .partition(|&&i| self.x.get(i, feature) <= threshold);
                    let slot = self.nodes.len();
                    self.nodes.push(TreeNode::Leaf { label: majority }); // placeholder
                    let left = self.build(&lhs, depth + 1);
                    let right = self.build(&rhs, depth + 1);
                    self.nodes[slot] = TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                    return slot;
                }
            }
        }
        self.nodes.push(TreeNode::Leaf { label: majority });
        self.nodes.len() - 1
    }
}

pub(super) fn fit(max_depth: i64, x: &Matrix, y: &[Label]) -> LearnedState {
    let mut builder = Builder {
        x,
        y,
        max_depth: max_depth.max(0) as usize,
        nodes: Vec::new(),
    };
    let all: Vec<usize> = (0..x.n_rows()).collect();
    builder.build(&all, 0);
    LearnedState::Tree {
        nodes: builder.nodes,
    }
}

pub(super) fn predict(nodes: &[TreeNode], x: &Matrix) -> Vec<Label> {
    x.rows_iter()
        .map(|row| {
            let mut at = 0usize; // the root is always node 0
            loop {
                match &nodes[at] {
                    TreeNode::Leaf { label } => return *label,
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        at = if row[*feature] <= *threshold {
                            *left
                        } else {
                            *right
                        };
                    }
                }
            }
        })
        .collect()
}
