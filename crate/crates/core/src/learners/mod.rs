//! The methods that populate pipeline nodes: three feature transformers and
//! four classifiers, implemented natively so complexity counting and
//! determinism are fully under our control.
//!
//! Each method exposes `fit` (validated, counted, deterministic), `apply`, and
//! a trainable-parameter count defined as the number of scalars (or index
//! slots) the fitted state needs in order to make predictions:
//!
//! | method              | count                          |
//! |---------------------|--------------------------------|
//! | StandardScaler      | 2d                             |
//! | MinMaxScaler        | 2d                             |
//! | SelectKBest         | k                              |
//! | LogisticRegression  | d+1 binary, c·(d+1) one-vs-rest|
//! | DecisionTree        | 2·internal + leaves            |
//! | GaussianNB          | c·(2d+1)                       |
//! | KNearestNeighbors   | n_train·(d+1)                  |

mod knn;
mod logistic;
mod naive_bayes;
mod scaling;
mod select_k;
mod tree;

pub use tree::TreeNode;

use crate::dataset::Label;
use crate::matrix::Matrix;
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use thiserror::Error;

/// Process-wide count of learner fits, across all threads and runs. Used to
/// audit how much training work an evaluation strategy really performs.
static FIT_CALLS: AtomicU64 = AtomicU64::new(0);

pub fn fit_calls_total() -> u64 {
    FIT_CALLS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    StandardScaler,
    MinMaxScaler,
    SelectKBest,
    LogisticRegression,
    DecisionTree,
    GaussianNb,
    KNearestNeighbors,
}

impl Method {
    pub const TRANSFORMERS: [Method; 3] = [
        Method::StandardScaler,
        Method::MinMaxScaler,
        Method::SelectKBest,
    ];
    pub const CLASSIFIERS: [Method; 4] = [
        Method::LogisticRegression,
        Method::DecisionTree,
        Method::GaussianNb,
        Method::KNearestNeighbors,
    ];
    pub const ALL: [Method; 7] = [
        Method::StandardScaler,
        Method::MinMaxScaler,
        Method::SelectKBest,
        Method::LogisticRegression,
        Method::DecisionTree,
        Method::GaussianNb,
        Method::KNearestNeighbors,
    ];

    pub fn is_classifier(self) -> bool {
        Method::CLASSIFIERS.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::StandardScaler => "StandardScaler",
            Method::MinMaxScaler => "MinMaxScaler",
            Method::SelectKBest => "SelectKBest",
            Method::LogisticRegression => "LogisticRegression",
            Method::DecisionTree => "DecisionTree",
            Method::GaussianNb => "GaussianNB",
            Method::KNearestNeighbors => "KNearestNeighbors",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.name() == name)
    }

    /// Declared hyperparameter domains, in sampling order. Every spec for this
    /// method carries exactly these keys with values from these lists.
    pub fn hyperparameter_domains(self) -> &'static [(&'static str, &'static [HyperValue])] {
        use HyperValue::{Float, Int};
        match self {
            Method::StandardScaler | Method::MinMaxScaler => &[],
            Method::SelectKBest => &[("k", &[Int(1), Int(2), Int(4), Int(8)])],
            Method::LogisticRegression => &[
                ("iterations", &[Int(100), Int(500)]),
                ("l2", &[Float(0.0), Float(0.01), Float(0.1)]),
                ("learning_rate", &[Float(0.01), Float(0.1)]),
            ],
            Method::DecisionTree => &[("max_depth", &[Int(1), Int(2), Int(3), Int(5)])],
            Method::GaussianNb => &[],
            Method::KNearestNeighbors => &[("k", &[Int(1), Int(3), Int(5), Int(7), Int(9)])],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A hyperparameter value. Domains are small discrete sets, so integers and
/// floats cover everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperValue {
    Int(i64),
    Float(f64),
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Int(v) => write!(f, "{v}"),
            // {:?} prints the shortest representation that round-trips.
            HyperValue::Float(v) => write!(f, "{v:?}"),
        }
    }
}

/// A method plus concrete hyperparameter choices — the content of one
/// pipeline node.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSpec {
    pub method: Method,
    pub hyperparameters: BTreeMap<String, HyperValue>,
}

impl LearnerSpec {
    fn int(&self, key: &str) -> i64 {
        match self.hyperparameters.get(key) {
            Some(HyperValue::Int(v)) => *v,
            other => panic!("{} spec missing integer '{key}' (got {other:?})", self.method),
        }
    }

    fn float(&self, key: &str) -> f64 {
        match self.hyperparameters.get(key) {
            Some(HyperValue::Float(v)) => *v,
            other => panic!("{} spec missing float '{key}' (got {other:?})", self.method),
        }
    }

    /// True when the keys and values match the method's declared domains.
    pub fn conforms(&self) -> bool {
        let domains = self.method.hyperparameter_domains();
        self.hyperparameters.len() == domains.len()
            && domains.iter().all(|(key, domain)| {
                self.hyperparameters
                    .get(*key)
                    .is_some_and(|v| domain.contains(v))
            })
    }
}

/// Draws each declared hyperparameter uniformly from its domain.
pub fn sample_spec<R: Rng + ?Sized>(method: Method, rng: &mut R) -> LearnerSpec {
    let mut hyperparameters = BTreeMap::new();
    for (key, domain) in method.hyperparameter_domains() {
        let pick = domain[rng.gen_range(0..domain.len())];
        hyperparameters.insert((*key).to_string(), pick);
    }
    LearnerSpec {
        method,
        hyperparameters,
    }
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("empty training input")]
    EmptyInput,
    #[error("{rows} feature rows but {labels} labels")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("non-finite value in training features")]
    NonFinite,
}

#[derive(Debug, Error)]
pub enum ApplyError {
    #[error("input has {got} columns, model was fitted on {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("non-finite value in input features")]
    NonFinite,
}

/// What a fitted method learned. Public so tests and tooling can enumerate
/// the stored scalars independently of [`FittedModel::param_count`].
#[derive(Debug, Clone, PartialEq)]
pub enum LearnedState {
    Standardize {
        means: Vec<f64>,
        scales: Vec<f64>,
    },
    MinMax {
        mins: Vec<f64>,
        spans: Vec<f64>,
    },
    SelectK {
        indices: Vec<usize>,
    },
    /// Logistic regression saw a single class at fit; predict that class.
    LogisticConstant {
        label: Label,
    },
    /// One weight row of length d+1 (bias last) for binary problems, one row
    /// per class (one-vs-rest) otherwise.
    Logistic {
        classes: Vec<Label>,
        weights: Vec<Vec<f64>>,
    },
    Tree {
        nodes: Vec<TreeNode>,
    },
    Gaussian {
        classes: Vec<Label>,
        priors: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    },
    Nearest {
        features: Matrix,
        labels: Vec<Label>,
    },
}

impl LearnedState {
    /// Number of scalars (or index slots) this state stores — the definition
    /// of "trainable parameters" used throughout.
    fn scalar_count(&self) -> u64 {
        match self {
            LearnedState::Standardize { means, scales } => (means.len() + scales.len()) as u64,
            LearnedState::MinMax { mins, spans } => (mins.len() + spans.len()) as u64,
            LearnedState::SelectK { indices } => indices.len() as u64,
            LearnedState::LogisticConstant { .. } => 1,
            LearnedState::Logistic { weights, .. } => {
                weights.iter().map(|w| w.len() as u64).sum()
            }
            LearnedState::Tree { nodes } => nodes
                .iter()
                .map(|n| match n {
                    TreeNode::Split { .. } => 2,
                    TreeNode::Leaf { .. } => 1,
                })
                .sum(),
            LearnedState::Gaussian {
                priors,
                means,
                variances,
                ..
            } => {
                (priors.len()
                    + means.iter().map(Vec::len).sum::<usize>()
                    + variances.iter().map(Vec::len).sum::<usize>()) as u64
            }
            LearnedState::Nearest { features, labels } => {
                (features.n_rows() * features.n_cols() + labels.len()) as u64
            }
        }
    }
}

/// Transformer output or classifier output.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Features(Matrix),
    Labels(Vec<Label>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    spec: LearnerSpec,
    input_width: usize,
    state: LearnedState,
}

impl FittedModel {
    pub fn spec(&self) -> &LearnerSpec {
        &self.spec
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn state(&self) -> &LearnedState {
        &self.state
    }

    pub fn param_count(&self) -> u64 {
        self.state.scalar_count()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Output, ApplyError> {
        if x.n_cols() != self.input_width {
            return Err(ApplyError::WidthMismatch {
                expected: self.input_width,
                got: x.n_cols(),
            });
        }
        if !x.is_finite() {
            return Err(ApplyError::NonFinite);
        }
        Ok(match &self.state {
            LearnedState::Standardize { means, scales } => {
                Output::Features(scaling::apply_standard(means, scales, x))
            }
            LearnedState::MinMax { mins, spans } => {
                Output::Features(scaling::apply_minmax(mins, spans, x))
            }
            LearnedState::SelectK { indices } => Output::Features(x.select_cols(indices)),
            LearnedState::LogisticConstant { label } => {
                Output::Labels(vec![*label; x.n_rows()])
            }
            LearnedState::Logistic { classes, weights } => {
                Output::Labels(logistic::predict(classes, weights, x))
            }
            LearnedState::Tree { nodes } => Output::Labels(tree::predict(nodes, x)),
            LearnedState::Gaussian {
                classes,
                priors,
                means,
                variances,
            } => Output::Labels(naive_bayes::predict(classes, priors, means, variances, x)),
            LearnedState::Nearest { features, labels } => {
                let k = self.spec.int("k");
                Output::Labels(knn::predict(k, features, labels, x))
            }
        })
    }
}

/// Fits `spec` to the data. `y` is consulted by the classifiers and by
/// SelectKBest (its score groups samples by class); the scalers ignore it.
pub fn fit(spec: &LearnerSpec, x: &Matrix, y: &[Label]) -> Result<FittedModel, FitError> {
    FIT_CALLS.fetch_add(1, Ordering::Relaxed);
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(FitError::EmptyInput);
    }
    if y.len() != x.n_rows() {
        return Err(FitError::LabelMismatch {
            rows: x.n_rows(),
            labels: y.len(),
        });
    }
    if !x.is_finite() {
        return Err(FitError::NonFinite);
    }
    let state = match spec.method {
        Method::StandardScaler => scaling::fit_standard(x),
        Method::MinMaxScaler => scaling::fit_minmax(x),
        Method::SelectKBest => select_k::fit(spec.int("k"), x, y),
        Method::LogisticRegression => logistic::fit(spec, x, y),
        Method::DecisionTree => tree::fit(spec.int("max_depth"), x, y),
        Method::GaussianNb => naive_bayes::fit(x, y),
        Method::KNearestNeighbors => knn::fit(x, y),
    };
    Ok(FittedModel {
        spec: spec.clone(),
        input_width: x.n_cols(),
        state,
    })
}

/// Sorted distinct labels, ascending.
fn distinct_classes(y: &[Label]) -> Vec<Label> {
    let mut classes: Vec<Label> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    classes
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn spec_of(method: Method, pairs: &[(&str, HyperValue)]) -> LearnerSpec {
        LearnerSpec {
            method,
            hyperparameters: pairs
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        }
    }

    /// A spec using the first value of every domain — handy as a cheap default.
    pub fn default_spec(method: Method) -> LearnerSpec {
        LearnerSpec {
            method,
            hyperparameters: method
                .hyperparameter_domains()
                .iter()
                .map(|(k, d)| (k.to_string(), d[0]))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::rng::stream;

    #[test]
    fn sampled_knn_spec_stays_in_domain() {
        for seed in 0..100 {
            let spec = sample_spec(Method::KNearestNeighbors, &mut stream(seed, 90, 0, 0));
            assert!(spec.conforms());
            assert!([1, 3, 5, 7, 9].contains(&spec.int("k")));
        }
    }

    #[test]
    fn scaler_spec_has_no_hyperparameters() {
        let spec = sample_spec(Method::StandardScaler, &mut stream(0, 90, 0, 0));
        assert!(spec.hyperparameters.is_empty());
        assert!(spec.conforms());
    }

    #[test]
    fn unknown_method_name_is_rejected() {
        assert_eq!(Method::from_name("RandomForest"), None);
        assert_eq!(Method::from_name("GaussianNB"), Some(Method::GaussianNb));
    }

    #[test]
    fn tree_depth_sampling_is_uniform() {
        // Chi-square goodness of fit against uniform over {1,2,3,5}; the
        // 0.999-quantile for 3 degrees of freedom is ~16.27.
        let mut rng = stream(7, 90, 0, 0);
        let mut counts = [0usize; 4];
        let domain = [1, 2, 3, 5];
        let draws = 10_000;
        for _ in 0..draws {
            let spec = sample_spec(Method::DecisionTree, &mut rng);
            let pos = domain
                .iter()
                .position(|&d| d == spec.int("max_depth"))
                .unwrap();
            counts[pos] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 16.27, "chi-square {chi2} too large: {counts:?}");
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 0.05, "frequency {freq} off uniform");
        }
    }

    #[test]
    fn fit_validates_input() {
        let spec = default_spec(Method::GaussianNb);
        let empty = Matrix::zeros(0, 2);
        assert!(matches!(
            fit(&spec, &empty, &[]),
            Err(FitError::EmptyInput)
        ));

        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        assert!(matches!(
            fit(&spec, &x, &[0]),
            Err(FitError::LabelMismatch { rows: 2, labels: 1 })
        ));

        let bad = Matrix::from_rows(&[vec![f64::NAN], vec![1.0]]);
        assert!(matches!(fit(&spec, &bad, &[0, 1]), Err(FitError::NonFinite)));
    }

    #[test]
    fn fit_counter_increments() {
        let spec = default_spec(Method::StandardScaler);
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        let before = fit_calls_total();
        fit(&spec, &x, &[0, 1]).unwrap();
        fit(&spec, &x, &[0, 1]).unwrap();
        // Other tests fit concurrently, so only monotonicity by ≥2 is safe.
        assert!(fit_calls_total() >= before + 2);
    }

    #[test]
    fn apply_rejects_width_mismatch() {
        let spec = default_spec(Method::StandardScaler);
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let model = fit(&spec, &x, &[0, 1]).unwrap();
        let narrow = Matrix::from_rows(&[vec![1.0]]);
        assert!(matches!(
            model.apply(&narrow),
            Err(ApplyError::WidthMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn fits_are_deterministic() {
        let x = Matrix::from_rows(&[
            vec![0.1, 1.0],
            vec![0.4, 2.0],
            vec![0.9, 0.5],
            vec![1.4, 2.5],
        ]);
        let y = &[0, 0, 1, 1];
        for method in Method::ALL {
            let spec = default_spec(method);
            let a = fit(&spec, &x, y).unwrap();
            let b = fit(&spec, &x, y).unwrap();
            assert_eq!(a, b, "{method} refit differs");
            assert_eq!(a.apply(&x).unwrap(), b.apply(&x).unwrap());
        }
    }

    #[test]
    fn classifier_outputs_stay_within_seen_classes() {
        let x = Matrix::from_rows(&[
            vec![0.0, 3.0],
            vec![0.5, 2.0],
            vec![5.0, 1.0],
            vec![5.5, 0.0],
            vec![9.0, 4.0],
        ]);
        let y = &[4, 4, 7, 7, 9]; // deliberately sparse label ids
        let probe = Matrix::from_rows(&[vec![-3.0, -3.0], vec![20.0, 20.0], vec![5.2, 1.7]]);
        for method in Method::CLASSIFIERS {
            let model = fit(&default_spec(method), &x, y).unwrap();
            match model.apply(&probe).unwrap() {
                Output::Labels(labels) => {
                    assert_eq!(labels.len(), 3);
                    for l in labels {
                        assert!([4, 7, 9].contains(&l), "{method} predicted unseen {l}");
                    }
                }
                Output::Features(_) => panic!("{method} is a classifier"),
            }
        }
    }

    #[test]
    fn transformer_outputs_preserve_rows() {
        let x = Matrix::from_rows(&[
            vec![0.0, 3.0, 1.0],
            vec![0.5, 2.0, 0.0],
            vec![5.0, 1.0, 2.0],
            vec![5.5, 0.0, 3.0],
        ]);
        let y = &[0, 0, 1, 1];
        for method in Method::TRANSFORMERS {
            let model = fit(&default_spec(method), &x, y).unwrap();
            match model.apply(&x).unwrap() {
                Output::Features(out) => {
                    assert_eq!(out.n_rows(), 4, "{method} changed row count");
                    assert!(out.n_cols() > 0, "{method} produced zero columns");
                    assert!(out.is_finite());
                }
                Output::Labels(_) => panic!("{method} is a transformer"),
            }
        }
    }
}
