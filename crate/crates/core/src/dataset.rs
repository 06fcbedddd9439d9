//! Tabular classification datasets and the two stratified partition schemes
//! used by the engine: a one-shot learning/selection split and k folds.
//!
//! Both schemes work per class: sample indices are grouped by label, shuffled,
//! and dealt out so every part mirrors the dataset's class frequencies to
//! within one sample per class.

use crate::matrix::Matrix;
use rand::seq::SliceRandom;
use rand::Rng;
use std::path::Path;
use thiserror::Error;

/// Class id: an index into [`Dataset::classes`].
pub type Label = u32;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed csv in {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("target column '{0}' not found in header")]
    MissingTarget(String),
    #[error("no feature columns besides target '{0}'")]
    NoFeatures(String),
    #[error("{0} has a header but no data rows")]
    EmptyBody(String),
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column '{column}': value is not finite")]
    NonFinite { row: usize, column: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("learning fraction {0} must lie strictly between 0 and 1")]
    FractionOutOfRange(f64),
    #[error("class '{class}' has {count} samples, need at least {needed}")]
    ClassTooSmall {
        class: String,
        count: usize,
        needed: usize,
    },
    #[error("fold count {k} out of range (need 2 <= k <= {n})")]
    FoldCountOutOfRange { k: usize, n: usize },
}

/// An in-memory classification dataset. Labels are stored as dense class ids;
/// `classes` maps them back to the original strings in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    features: Matrix,
    labels: Vec<Label>,
    classes: Vec<String>,
}

impl Dataset {
    pub fn from_parts(
        name: impl Into<String>,
        features: Matrix,
        labels: Vec<Label>,
        classes: Vec<String>,
    ) -> Result<Self, DatasetError> {
        if features.n_rows() == 0 {
            return Err(DatasetError::Invalid("no samples".into()));
        }
        if features.n_cols() == 0 {
            return Err(DatasetError::Invalid("no feature columns".into()));
        }
        if features.n_rows() != labels.len() {
            return Err(DatasetError::Invalid(format!(
                "{} feature rows but {} labels",
                features.n_rows(),
                labels.len()
            )));
        }
        if !features.is_finite() {
            return Err(DatasetError::Invalid("non-finite feature value".into()));
        }
        if labels.iter().any(|&l| l as usize >= classes.len()) {
            return Err(DatasetError::Invalid("label out of class range".into()));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            classes,
        })
    }

    /// Reads a CSV file with a header row. `target` names the label column;
    /// every other column must parse as a finite number.
    pub fn load_csv(path: impl AsRef<Path>, target: &str) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
            path: shown.clone(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(file);

        let headers: Vec<String> = reader
            .headers()
            .map_err(|source| DatasetError::Csv {
                path: shown.clone(),
                source,
            })?
            .iter()
            .map(|h| h.to_string())
            .collect();
        let target_col = headers
            .iter()
            .position(|h| h == target)
            .ok_or_else(|| DatasetError::MissingTarget(target.to_string()))?;
        if headers.len() < 2 {
            return Err(DatasetError::NoFeatures(target.to_string()));
        }

        let mut classes: Vec<String> = Vec::new();
        let mut labels: Vec<Label> = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|source| DatasetError::Csv {
                path: shown.clone(),
                source,
            })?;
            // 1-based, counting the header, so the number matches the file.
            let file_row = idx + 2;
            let mut row = Vec::with_capacity(headers.len() - 1);
            for (col, cell) in record.iter().enumerate() {
                if col == target_col {
                    let label = match classes.iter().position(|c| c == cell) {
                        Some(id) => id as Label,
                        None => {
                            classes.push(cell.to_string());
                            (classes.len() - 1) as Label
                        }
                    };
                    labels.push(label);
                } else {
                    let value: f64 = cell.parse().map_err(|_| DatasetError::BadCell {
                        row: file_row,
                        column: headers[col].clone(),
                        value: cell.to_string(),
                    })?;
                    if !value.is_finite() {
                        return Err(DatasetError::NonFinite {
                            row: file_row,
                            column: headers[col].clone(),
                        });
                    }
                    row.push(value);
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(DatasetError::EmptyBody(shown));
        }

        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or(shown);
        Dataset::from_parts(name, Matrix::from_rows(&rows), labels, classes)
    }

    pub fn n_samples(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_name(&self, label: Label) -> &str {
        &self.classes[label as usize]
    }

    /// Samples per class, indexed by class id. Classes absent from a subset
    /// keep an entry with count zero.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes.len()];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    /// Sample indices grouped by class id, each group ascending.
    pub fn class_index_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.classes.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            lists[l as usize].push(i);
        }
        lists
    }

    /// Fraction held by the most common class (the floor for any classifier).
    pub fn majority_fraction(&self) -> f64 {
        let counts = self.class_counts();
        let max = counts.iter().copied().max().unwrap_or(0);
        max as f64 / self.n_samples() as f64
    }

    /// Features and labels for the given sample indices.
    pub fn select_xy(&self, indices: &[usize]) -> (Matrix, Vec<Label>) {
        let x = self.features.select_rows(indices);
        let y = indices.iter().map(|&i| self.labels[i]).collect();
        (x, y)
    }

    /// Row subset as a dataset in its own right. The class inventory is
    /// inherited from the parent so label ids keep their meaning.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let (features, labels) = self.select_xy(indices);
        Dataset {
            name: self.name.clone(),
            features,
            labels,
            classes: self.classes.clone(),
        }
    }
}

/// Index partition produced by [`stratified_split`]: fit on `learning`, score
/// on `selection`. Both sides are ascending and disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub learning: Vec<usize>,
    pub selection: Vec<usize>,
}

/// Index partition produced by [`stratified_kfold`]. Fold `i` is the held-out
/// part of round `i`; `train_for(i)` is its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldSet {
    pub folds: Vec<Vec<usize>>,
}

impl FoldSet {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn train_for(&self, fold: usize) -> Vec<usize> {
        let mut train: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        train.sort_unstable();
        train
    }
}

/// Splits sample indices into a learning part of roughly `learn_fraction` of
/// the data and a selection part with the rest, preserving class frequencies
/// to within one sample per class. Every class must have at least two samples
/// so both sides see all classes.
pub fn stratified_split<R: Rng + ?Sized>(
    ds: &Dataset,
    learn_fraction: f64,
    rng: &mut R,
) -> Result<SplitPair, DatasetError> {
    if !learn_fraction.is_finite() || learn_fraction <= 0.0 || learn_fraction >= 1.0 {
        return Err(DatasetError::FractionOutOfRange(learn_fraction));
    }
    let lists = ds.class_index_lists();
    for (c, list) in lists.iter().enumerate() {
        if list.len() < 2 {
            return Err(DatasetError::ClassTooSmall {
                class: ds.classes[c].to_string(),
                count: list.len(),
                needed: 2,
            });
        }
    }

    let n = ds.n_samples();
    let target = (learn_fraction * n as f64).round() as usize;
    let mut quota: Vec<usize> = lists
        .iter()
        .map(|l| (learn_fraction * l.len() as f64).floor() as usize)
        .collect();

    // Hand out the rounding remainder by largest fractional part (ties go to
    // the lower class id), skipping any class that must keep a sample for the
    // selection side. A class never receives more than one extra sample, so
    // each class stays within one sample of its exact share.
    let fracs: Vec<f64> = lists
        .iter()
        .map(|l| {
            let exact = learn_fraction * l.len() as f64;
            exact - exact.floor()
        })
        .collect();
    let mut order: Vec<usize> = (0..lists.len()).collect();
    order.sort_by(|&a, &b| fracs[b].partial_cmp(&fracs[a]).unwrap().then(a.cmp(&b)));
    let assigned: usize = quota.iter().sum();
    let mut deficit = target.saturating_sub(assigned);
    for &c in &order {
        if deficit == 0 {
            break;
        }
        if quota[c] + 1 <= lists[c].len() - 1 {
            quota[c] += 1;
            deficit -= 1;
        }
    }
    // Tiny classes can floor to zero; both sides must see every class.
    for (c, q) in quota.iter_mut().enumerate() {
        if *q == 0 {
            *q = 1;
        }
        debug_assert!(*q < lists[c].len());
    }

    let mut learning = Vec::new();
    let mut selection = Vec::new();
    for (c, list) in lists.iter().enumerate() {
        let mut shuffled = list.clone();
        shuffled.shuffle(rng);
        learning.extend_from_slice(&shuffled[..quota[c]]);
        selection.extend_from_slice(&shuffled[quota[c]..]);
    }
    learning.sort_unstable();
    selection.sort_unstable();
    Ok(SplitPair {
        learning,
        selection,
    })
}

/// Partitions sample indices into `k` folds of near-equal size, preserving
/// class frequencies to within one sample per class per fold. Every class
/// must have at least `k` samples.
pub fn stratified_kfold<R: Rng + ?Sized>(
    ds: &Dataset,
    k: usize,
    rng: &mut R,
) -> Result<FoldSet, DatasetError> {
    let n = ds.n_samples();
    if k < 2 || k > n {
        return Err(DatasetError::FoldCountOutOfRange { k, n });
    }
    let lists = ds.class_index_lists();
    for (c, list) in lists.iter().enumerate() {
        if list.len() < k {
            return Err(DatasetError::ClassTooSmall {
                class: ds.classes[c].to_string(),
                count: list.len(),
                needed: k,
            });
        }
    }

    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut totals = vec![0usize; k];
    for list in &lists {
        let mut shuffled = list.clone();
        shuffled.shuffle(rng);
        let base = shuffled.len() / k;
        let rem = shuffled.len() % k;
        // The class's leftover samples go to the currently smallest folds so
        // fold sizes stay balanced overall, not just per class.
        let mut rank: Vec<usize> = (0..k).collect();
        rank.sort_by_key(|&f| (totals[f], f));
        let mut cursor = 0;
        for (pos, &f) in rank.iter().enumerate() {
            let take = base + usize::from(pos < rem);
            folds[f].extend_from_slice(&shuffled[cursor..cursor + take]);
            totals[f] += take;
            cursor += take;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldSet { folds })
}

/// Test fixture shared across the crate: `counts[c]` samples of class `c` in
/// label order, one informative feature plus one within-class index feature.
#[cfg(test)]
pub(crate) fn synthetic(counts: &[usize]) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, &count) in counts.iter().enumerate() {
        for i in 0..count {
            rows.push(vec![c as f64 * 10.0 + i as f64, i as f64]);
            labels.push(c as Label);
        }
    }
    let classes = (0..counts.len()).map(|c| format!("c{c}")).collect();
    Dataset::from_parts("synthetic", Matrix::from_rows(&rows), labels, classes).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_small_csv() {
        let f = write_csv("a,b,y\n1.0,2.0,pos\n3.0,4.0,neg\n5.5,6.5,pos\n");
        let ds = Dataset::load_csv(f.path(), "y").unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.classes(), &["pos", "neg"]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.features().row(2), &[5.5, 6.5]);
    }

    #[test]
    fn target_column_may_sit_anywhere() {
        let f = write_csv("y,a\npos,1\nneg,2\n");
        let ds = Dataset::load_csv(f.path(), "y").unwrap();
        assert_eq!(ds.n_features(), 1);
        assert_eq!(ds.features().row(1), &[2.0]);
    }

    #[test]
    fn class_ids_follow_first_appearance() {
        let f = write_csv("a,y\n1,zebra\n2,ant\n3,zebra\n4,mole\n");
        let ds = Dataset::load_csv(f.path(), "y").unwrap();
        assert_eq!(ds.classes(), &["zebra", "ant", "mole"]);
        assert_eq!(ds.labels(), &[0, 1, 0, 2]);
    }

    #[test]
    fn missing_target_names_the_column() {
        let f = write_csv("a,b\n1,2\n");
        let err = Dataset::load_csv(f.path(), "z").unwrap_err();
        assert!(matches!(err, DatasetError::MissingTarget(ref c) if c == "z"));
    }

    #[test]
    fn bad_cell_reports_row_and_column() {
        let f = write_csv("a,b,y\n1,2,x\n1,oops,y\n");
        let err = Dataset::load_csv(f.path(), "y").unwrap_err();
        match err {
            DatasetError::BadCell { row, column, value } => {
                assert_eq!(row, 3);
                assert_eq!(column, "b");
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_body_is_an_error() {
        let f = write_csv("a,y\n");
        assert!(matches!(
            Dataset::load_csv(f.path(), "y"),
            Err(DatasetError::EmptyBody(_))
        ));
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(
            Dataset::load_csv("/no/such/file.csv", "y"),
            Err(DatasetError::Io { .. })
        ));
    }

    #[test]
    fn only_target_column_is_an_error() {
        let f = write_csv("y\npos\nneg\n");
        assert!(matches!(
            Dataset::load_csv(f.path(), "y"),
            Err(DatasetError::NoFeatures(_))
        ));
    }

    #[test]
    fn split_90_10_on_balanced_100() {
        let ds = synthetic(&[50, 50]);
        let split = stratified_split(&ds, 0.9, &mut stream(1, 99, 0, 0)).unwrap();
        assert_eq!(split.learning.len(), 90);
        assert_eq!(split.selection.len(), 10);
        let learn = ds.subset(&split.learning);
        assert_eq!(learn.class_counts(), vec![45, 45]);
        let sel = ds.subset(&split.selection);
        assert_eq!(sel.class_counts(), vec![5, 5]);
    }

    #[test]
    fn split_is_a_partition() {
        let ds = synthetic(&[13, 29, 8]);
        let split = stratified_split(&ds, 0.7, &mut stream(2, 99, 0, 0)).unwrap();
        let mut all: Vec<usize> = split
            .learning
            .iter()
            .chain(split.selection.iter())
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let ds = synthetic(&[5, 5]);
        for f in [0.0, 1.0, -0.2, 1.7, f64::NAN] {
            assert!(matches!(
                stratified_split(&ds, f, &mut stream(0, 99, 0, 0)),
                Err(DatasetError::FractionOutOfRange(_))
            ));
        }
    }

    #[test]
    fn split_rejects_singleton_class() {
        let ds = synthetic(&[5, 1]);
        assert!(matches!(
            stratified_split(&ds, 0.5, &mut stream(0, 99, 0, 0)),
            Err(DatasetError::ClassTooSmall { needed: 2, .. })
        ));
    }

    #[test]
    fn split_same_seed_reproduces_different_seed_moves() {
        let ds = synthetic(&[20, 20]);
        let a = stratified_split(&ds, 0.5, &mut stream(7, 99, 0, 0)).unwrap();
        let b = stratified_split(&ds, 0.5, &mut stream(7, 99, 0, 0)).unwrap();
        assert_eq!(a, b);
        let differs = (0..20).any(|s| {
            stratified_split(&ds, 0.5, &mut stream(s, 99, 0, 0)).unwrap() != a
        });
        assert!(differs, "every seed produced the identical split");
    }

    #[test]
    fn small_balanced_split_is_exact_for_every_seed() {
        // 10 samples, two classes of 5, half split: every seed must put
        // exactly 2 or 3 of each class on each side (here: exactly 2.5
        // rounds to floor+remainder, so the counts land on 2 and 3).
        let ds = synthetic(&[5, 5]);
        for seed in 0..1000 {
            let split = stratified_split(&ds, 0.5, &mut stream(seed, 99, 0, 0)).unwrap();
            let learn = ds.subset(&split.learning);
            for (c, &count) in learn.class_counts().iter().enumerate() {
                let share = split.learning.len() as f64 * 0.5;
                assert!(
                    (count as f64 - share).abs() <= 1.0 + 1e-9,
                    "seed {seed} class {c}: {count} vs share {share}"
                );
            }
        }
    }

    #[test]
    fn kfold_partitions_evenly() {
        let ds = synthetic(&[60, 40]);
        let folds = stratified_kfold(&ds, 10, &mut stream(3, 99, 0, 0)).unwrap();
        assert_eq!(folds.k(), 10);
        let mut all = Vec::new();
        for fold in &folds.folds {
            assert_eq!(fold.len(), 10);
            let sub = ds.subset(fold);
            assert_eq!(sub.class_counts(), vec![6, 4]);
            all.extend_from_slice(fold);
        }
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_train_complement() {
        let ds = synthetic(&[12, 12]);
        let folds = stratified_kfold(&ds, 4, &mut stream(4, 99, 0, 0)).unwrap();
        for i in 0..4 {
            let train = folds.train_for(i);
            assert_eq!(train.len(), 18);
            for idx in &folds.folds[i] {
                assert!(!train.contains(idx));
            }
        }
    }

    #[test]
    fn kfold_uneven_classes_stay_within_one() {
        // 20 samples, 10+10, k=4: per class each fold holds 2 or 3.
        let ds = synthetic(&[10, 10]);
        for seed in 0..1000 {
            let folds = stratified_kfold(&ds, 4, &mut stream(seed, 98, 0, 0)).unwrap();
            for fold in &folds.folds {
                let sub = ds.subset(fold);
                for &count in &sub.class_counts() {
                    assert!((2..=3).contains(&count), "seed {seed}: count {count}");
                }
            }
        }
    }

    #[test]
    fn kfold_rejects_bad_k() {
        let ds = synthetic(&[5, 5]);
        assert!(matches!(
            stratified_kfold(&ds, 1, &mut stream(0, 99, 0, 0)),
            Err(DatasetError::FoldCountOutOfRange { .. })
        ));
        assert!(matches!(
            stratified_kfold(&ds, 11, &mut stream(0, 99, 0, 0)),
            Err(DatasetError::FoldCountOutOfRange { .. })
        ));
        assert!(matches!(
            stratified_kfold(&ds, 6, &mut stream(0, 99, 0, 0)),
            Err(DatasetError::ClassTooSmall { needed: 6, .. })
        ));
    }

    #[test]
    fn subset_keeps_class_inventory() {
        let ds = synthetic(&[4, 4, 4]);
        let sub = ds.subset(&[0, 1, 2, 3]);
        assert_eq!(sub.n_classes(), 3);
        assert_eq!(sub.class_counts(), vec![4, 0, 0]);
    }
}
