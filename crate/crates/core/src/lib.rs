//! Evolutionary search over small machine-learning pipelines.
//!
//! The engine evolves DAG-shaped pipelines (feature transformers feeding a
//! single classifier) with mutation-only reproduction and lexicase parent
//! selection. Two model-evaluation strategies are provided and can be compared
//! head to head:
//!
//! * **lexidate** — split the training data once into a learning part and a
//!   selection part; fit on the learning part and keep the per-sample
//!   right/wrong grades on the selection part as selection objectives.
//! * **cross-validation** — stratified k-fold; selection sees the mean fold
//!   accuracy and the mean model complexity.
//!
//! [`stats`] holds the nonparametric machinery (Kruskal-Wallis, rank-sum,
//! Bonferroni) used to compare finished runs.

pub mod dataset;
pub mod evaluation;
pub mod evolution;
pub mod learners;
pub mod matrix;
pub mod pipeline;
pub mod rng;
pub mod selection;
pub mod stats;

pub use dataset::Dataset;
pub use matrix::Matrix;
