//! Randomized invariant checks over the public API: stratification bounds,
//! mutation closure, text round-trips, and the rank-test conventions.

use lexidate::dataset::{stratified_kfold, stratified_split, Label};
use lexidate::pipeline::{dump, mutate_with_report, parse, random_pipeline};
use lexidate::rng::stream;
use lexidate::selection::{
    lexicase_select, selection_distribution, Direction, ObjectiveMatrix,
};
use lexidate::stats::{bonferroni, wilcoxon_rank_sum};
use lexidate::{Dataset, Matrix};
use proptest::prelude::*;

/// Deterministic dataset with the given per-class sample counts.
fn dataset_from_counts(counts: &[usize]) -> Dataset {
    let mut rows = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    for (c, &count) in counts.iter().enumerate() {
        for i in 0..count {
            rows.push(vec![c as f64 * 3.0 + i as f64 * 0.01, i as f64]);
            labels.push(c as Label);
        }
    }
    let classes = (0..counts.len()).map(|c| format!("c{c}")).collect();
    Dataset::from_parts("generated", Matrix::from_rows(&rows), labels, classes).unwrap()
}

fn class_of(counts: &[usize], index: usize) -> usize {
    let mut seen = 0;
    for (c, &count) in counts.iter().enumerate() {
        seen += count;
        if index < seen {
            return c;
        }
    }
    unreachable!("index outside the dataset")
}

proptest! {
    #[test]
    fn splits_partition_the_data_and_stay_within_one_per_class(
        counts in prop::collection::vec(2usize..=25, 2..=5),
        fraction in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        let ds = dataset_from_counts(&counts);
        let split = stratified_split(&ds, fraction, &mut stream(seed, 201, 0, 0)).unwrap();

        let mut all: Vec<usize> = split.learning.iter().chain(&split.selection).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ds.n_samples()).collect::<Vec<_>>());

        for (c, &count) in counts.iter().enumerate() {
            let learned = split.learning.iter().filter(|&&i| class_of(&counts, i) == c).count();
            prop_assert!(learned >= 1, "class {} absent from the learning side", c);
            prop_assert!(learned < count, "class {} absent from the selection side", c);
            prop_assert!(
                (learned as f64 - fraction * count as f64).abs() <= 1.0,
                "class {}: {} of {} learned at fraction {}",
                c, learned, count, fraction
            );
        }
    }

    #[test]
    fn folds_partition_the_data_and_stay_within_one_per_class(
        (k, counts) in (2usize..=6).prop_flat_map(|k| {
            (Just(k), prop::collection::vec(k..=25usize, 2..=5))
        }),
        seed in any::<u64>(),
    ) {
        let ds = dataset_from_counts(&counts);
        let folds = stratified_kfold(&ds, k, &mut stream(seed, 202, 0, 0)).unwrap();
        prop_assert_eq!(folds.k(), k);

        let mut all: Vec<usize> = folds.folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..ds.n_samples()).collect::<Vec<_>>());

        for (c, &count) in counts.iter().enumerate() {
            let per_fold: Vec<usize> = folds
                .folds
                .iter()
                .map(|f| f.iter().filter(|&&i| class_of(&counts, i) == c).count())
                .collect();
            prop_assert_eq!(per_fold.iter().sum::<usize>(), count);
            let spread = per_fold.iter().max().unwrap() - per_fold.iter().min().unwrap();
            prop_assert!(spread <= 1, "class {} fold counts {:?}", c, per_fold);
        }
    }

    #[test]
    fn mutation_chains_preserve_validity_and_failures_preserve_the_graph(
        seed in any::<u64>(),
        max_nodes in 1usize..=10,
        steps in 1usize..=30,
    ) {
        let mut rng = stream(seed, 203, 0, 0);
        let mut graph = random_pipeline(max_nodes, &mut rng);
        prop_assert!(graph.validate().is_empty());
        prop_assert!(graph.len() <= max_nodes);

        for _ in 0..steps {
            let (next, report) = mutate_with_report(&graph, &mut rng);
            prop_assert!(next.validate().is_empty(), "{:?} broke the graph", report.operator);
            if !report.applied {
                prop_assert_eq!(&next, &graph);
            }
            graph = next;
        }
    }

    #[test]
    fn pipeline_text_round_trips(seed in any::<u64>(), max_nodes in 1usize..=10) {
        let graph = random_pipeline(max_nodes, &mut stream(seed, 204, 0, 0));
        let text = dump(&graph);
        let reparsed = parse(&text).unwrap();
        prop_assert_eq!(&reparsed, &graph);
        prop_assert_eq!(dump(&reparsed), text);
    }

    #[test]
    fn rank_sum_is_symmetric_and_bounded(
        a in prop::collection::vec(0u8..=5, 1..=8),
        b in prop::collection::vec(0u8..=5, 1..=8),
    ) {
        // a coarse value grid forces plenty of ties
        let a: Vec<f64> = a.into_iter().map(|v| v as f64 / 2.0).collect();
        let b: Vec<f64> = b.into_iter().map(|v| v as f64 / 2.0).collect();
        let (u1, p_ab) = wilcoxon_rank_sum(&a, &b).unwrap();
        let (u2, p_ba) = wilcoxon_rank_sum(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&p_ab));
        prop_assert_eq!(p_ab.to_bits(), p_ba.to_bits(), "two-tailed p must not depend on argument order");
        prop_assert_eq!(u1 + u2, (a.len() * b.len()) as f64);
    }

    #[test]
    fn bonferroni_is_monotone_and_clamped(
        ps in prop::collection::vec(0.0f64..=1.0, 1..=6),
        extra in 0usize..=3,
    ) {
        let m = ps.len() + extra;
        let adjusted = bonferroni(&ps, m).unwrap();
        for (&raw, &adj) in ps.iter().zip(&adjusted) {
            prop_assert!(adj >= raw.min(1.0));
            prop_assert!(adj <= 1.0);
        }
        for i in 0..ps.len() {
            for j in 0..ps.len() {
                if ps[i] <= ps[j] {
                    prop_assert!(adjusted[i] <= adjusted[j]);
                }
            }
        }
    }

    #[test]
    fn selection_distribution_is_a_distribution_over_the_valid_rows(
        scores in prop::collection::vec(prop::collection::vec(0u8..3, 3), 1..=5),
        direction_bits in prop::collection::vec(any::<bool>(), 3),
        mask_bits in prop::collection::vec(any::<bool>(), 5),
        keep in 0usize..5,
        seed in any::<u64>(),
    ) {
        let n = scores.len();
        let scores: Vec<Vec<f64>> =
            scores.into_iter().map(|row| row.into_iter().map(f64::from).collect()).collect();
        let directions: Vec<Direction> = direction_bits
            .into_iter()
            .map(|bit| if bit { Direction::Maximize } else { Direction::Minimize })
            .collect();
        let mut mask: Vec<bool> = mask_bits.into_iter().take(n).collect();
        mask[keep.min(n - 1)] = true;

        let matrix = ObjectiveMatrix::new(scores, directions, mask.clone()).unwrap();
        let distribution = selection_distribution(&matrix).unwrap();

        prop_assert_eq!(distribution.len(), n);
        let total: f64 = distribution.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "probabilities sum to {}", total);
        for (i, &p) in distribution.iter().enumerate() {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
            if !mask[i] {
                prop_assert_eq!(p, 0.0, "invalid row {} was given probability", i);
            }
        }

        let mut rng = stream(seed, 205, 0, 0);
        for _ in 0..25 {
            let chosen = lexicase_select(&matrix, &mut rng).unwrap();
            prop_assert!(distribution[chosen] > 0.0, "drew row {} which has probability 0", chosen);
        }
    }
}
