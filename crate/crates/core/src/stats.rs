//! Nonparametric comparison of strategy outcomes: Kruskal–Wallis omnibus
//! test, pairwise two-tailed Wilcoxon rank-sum, Bonferroni correction, and
//! the grid report that lays datasets × treatments out against a reference.
//!
//! Conventions (declared, since the literature admits variants): mid-ranks
//! for ties everywhere; Kruskal–Wallis p from the chi-square approximation;
//! Wilcoxon p by exact enumeration when the pooled sample is small (n ≤ 12)
//! and tie-free, otherwise by normal approximation with tie and continuity
//! corrections. Pairwise tests run only when the omnibus test is significant.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least two groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {0:?} is empty")]
    EmptyGroup(String),
    #[error("group {0:?} contains a non-finite value")]
    NonFinite(String),
    #[error("duplicate group label {0:?}")]
    DuplicateLabel(String),
    #[error("need at least {need} total samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("empty sample vector")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFiniteSample,
    #[error("p-value {0} outside [0, 1]")]
    BadPValue(f64),
    #[error("correction count {m} is below the number of p-values {len}")]
    BadCorrectionCount { m: usize, len: usize },
    #[error("alpha {0} outside the open interval (0, 1)")]
    BadAlpha(f64),
    #[error("group {label:?} has {got} replicates, need at least 2")]
    TooFewReplicates { label: String, got: usize },
}

/// Labelled sample vectors, one per strategy being compared.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSamples {
    groups: Vec<(String, Vec<f64>)>,
}

impl GroupedSamples {
    pub fn new(groups: Vec<(String, Vec<f64>)>) -> Result<Self, StatsError> {
        if groups.len() < 2 {
            return Err(StatsError::TooFewGroups(groups.len()));
        }
        let mut seen = BTreeSet::new();
        for (label, values) in &groups {
            if !seen.insert(label.clone()) {
                return Err(StatsError::DuplicateLabel(label.clone()));
            }
            if values.is_empty() {
                return Err(StatsError::EmptyGroup(label.clone()));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite(label.clone()));
            }
        }
        Ok(GroupedSamples { groups })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[(String, Vec<f64>)] {
        &self.groups
    }

    pub fn total_samples(&self) -> usize {
        self.groups.iter().map(|(_, v)| v.len()).sum()
    }
}

/// Ranks 1..=n with ties sharing their average rank, plus the size of each
/// tie group (singletons included), in sorted order.
fn mid_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average of ranks i+1..=j+1
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }
    (ranks, tie_sizes)
}

/// Kruskal–Wallis H with tie correction and its chi-square p-value
/// (df = groups − 1). All values identical is not an error: (0, 1).
pub fn kruskal_wallis(samples: &GroupedSamples) -> Result<(f64, f64), StatsError> {
    let n = samples.total_samples();
    if n < 3 {
        return Err(StatsError::TooFewSamples { need: 3, got: n });
    }
    let k = samples.len();

    let pooled: Vec<f64> = samples
        .groups
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    let (ranks, tie_sizes) = mid_ranks(&pooled);

    let nf = n as f64;
    let mut h = 0.0;
    let mut offset = 0;
    for (_, values) in &samples.groups {
        let r: f64 = ranks[offset..offset + values.len()].iter().sum();
        h += r * r / values.len() as f64;
        offset += values.len();
    }
    h = 12.0 / (nf * (nf + 1.0)) * h - 3.0 * (nf + 1.0);

    let tie_sum: f64 = tie_sizes
        .iter()
        .map(|&t| (t * t * t - t) as f64)
        .sum();
    let correction = 1.0 - tie_sum / (nf * nf * nf - nf);
    if correction <= 0.0 {
        // every value tied with every other: no information, no effect
        return Ok((0.0, 1.0));
    }
    let h = (h / correction).max(0.0);

    let chi = ChiSquared::new((k - 1) as f64).expect("k >= 2 so df >= 1");
    let p = chi.sf(h).clamp(0.0, 1.0);
    Ok((h, p))
}

/// Exact two-tailed p for a tie-free pooled sample: counts the size-`na`
/// subsets of ranks 1..=n with sum at most / at least the observed rank sum.
fn exact_two_tailed(rank_sum_a: usize, na: usize, n: usize) -> f64 {
    let max_sum = n * (n + 1) / 2;
    // dp[j][s]: subsets of the ranks seen so far with j members summing to s
    let mut dp = vec![vec![0u64; max_sum + 1]; na + 1];
    dp[0][0] = 1;
    for r in 1..=n {
        for j in (1..=na).rev() {
            for s in (r..=max_sum).rev() {
                dp[j][s] += dp[j - 1][s - r];
            }
        }
    }
    let total: u64 = dp[na].iter().sum();
    let le: u64 = dp[na][..=rank_sum_a].iter().sum();
    let ge: u64 = dp[na][rank_sum_a..].iter().sum();
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

fn approx_two_tailed(u1: f64, na: usize, nb: usize, tie_sizes: &[usize]) -> f64 {
    let n = na + nb;
    let nf = n as f64;
    let mean = (na * nb) as f64 / 2.0;
    let tie_sum: f64 = tie_sizes
        .iter()
        .map(|&t| (t * t * t - t) as f64)
        .sum();
    let variance =
        (na * nb) as f64 / 12.0 * ((nf + 1.0) - tie_sum / (nf * (nf - 1.0)));
    if variance <= 0.0 {
        return 1.0; // all values tied: the test carries no information
    }
    let z = (((u1 - mean).abs() - 0.5) / variance.sqrt()).max(0.0);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.sf(z)).min(1.0)
}

/// Two-tailed Wilcoxon rank-sum (Mann–Whitney). Returns (U for `a`, p).
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<(f64, f64), StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFiniteSample);
    }
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;

    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_sizes) = mid_ranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u1 = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    let has_ties = tie_sizes.iter().any(|&t| t > 1);
    let p = if n <= 12 && !has_ties {
        // rank sums are integers when there are no ties
        exact_two_tailed(rank_sum_a.round() as usize, na, n)
    } else {
        approx_two_tailed(u1, na, nb, &tie_sizes)
    };
    Ok((u1, p))
}

/// Multiplies each p-value by `m` and clamps to 1.
pub fn bonferroni(pvals: &[f64], m: usize) -> Result<Vec<f64>, StatsError> {
    if m < pvals.len() {
        return Err(StatsError::BadCorrectionCount {
            m,
            len: pvals.len(),
        });
    }
    let mut adjusted = Vec::with_capacity(pvals.len());
    for &p in pvals {
        if !(0.0..=1.0).contains(&p) {
            return Err(StatsError::BadPValue(p));
        }
        adjusted.push((p * m as f64).min(1.0));
    }
    Ok(adjusted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult {
    pub label_a: String,
    pub label_b: String,
    pub u: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

/// Outcome of [`compare_strategies`]: the omnibus test plus, when it fires,
/// every pairwise comparison Bonferroni-corrected over the number of pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub labels: Vec<String>,
    pub h: f64,
    pub omnibus_p: f64,
    /// Empty when the omnibus test did not reach significance.
    pub pairs: Vec<PairwiseResult>,
}

/// Omnibus Kruskal–Wallis across all groups; if significant at `alpha`, every
/// pair (in the order the groups were given) is tested with Wilcoxon rank-sum
/// and Bonferroni-corrected by the pair count.
pub fn compare_strategies(
    samples: &GroupedSamples,
    alpha: f64,
) -> Result<ComparisonReport, StatsError> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(StatsError::BadAlpha(alpha));
    }
    for (label, values) in samples.groups() {
        if values.len() < 2 {
            return Err(StatsError::TooFewReplicates {
                label: label.clone(),
                got: values.len(),
            });
        }
    }

    let (h, omnibus_p) = kruskal_wallis(samples)?;
    let labels: Vec<String> = samples.groups().iter().map(|(l, _)| l.clone()).collect();

    let mut pairs = Vec::new();
    if omnibus_p < alpha {
        let k = samples.len();
        let m = k * (k - 1) / 2;
        let mut raw = Vec::with_capacity(m);
        let mut meta = Vec::with_capacity(m);
        for i in 0..k {
            for j in (i + 1)..k {
                let (u, p) = wilcoxon_rank_sum(&samples.groups[i].1, &samples.groups[j].1)?;
                raw.push(p);
                meta.push((labels[i].clone(), labels[j].clone(), u));
            }
        }
        let adjusted = bonferroni(&raw, m)?;
        pairs = meta
            .into_iter()
            .zip(raw)
            .zip(adjusted)
            .map(|(((label_a, label_b, u), p_raw), p_adjusted)| PairwiseResult {
                label_a,
                label_b,
                u,
                p_raw,
                p_adjusted,
                significant: p_adjusted < alpha,
            })
            .collect();
    }

    Ok(ComparisonReport {
        alpha,
        labels,
        h,
        omnibus_p,
        pairs,
    })
}

/// One cell of the dataset × treatment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub p: f64,
    pub significant: bool,
    /// True when the value is a Bonferroni-adjusted pairwise p against the
    /// reference; false when pairwise tests were skipped and the omnibus p
    /// is shown instead.
    pub pairwise: bool,
}

/// Datasets × treatments grid of p-values against a reference treatment,
/// with a closing row counting the datasets per column where no significant
/// difference was found.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGrid {
    pub metric: String,
    pub reference: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<GridCell>)>,
    pub no_significance_counts: Vec<usize>,
}

pub fn table_grid(
    metric: &str,
    reference: &str,
    columns: &[String],
    entries: &[(String, ComparisonReport)],
) -> TableGrid {
    let rows: Vec<(String, Vec<GridCell>)> = entries
        .iter()
        .map(|(dataset, report)| {
            let cells = columns
                .iter()
                .map(|column| {
                    let hit = report.pairs.iter().find(|p| {
                        (p.label_a == *reference && p.label_b == *column)
                            || (p.label_a == *column && p.label_b == *reference)
                    });
                    match hit {
                        Some(pair) => GridCell {
                            p: pair.p_adjusted,
                            significant: pair.significant,
                            pairwise: true,
                        },
                        None => GridCell {
                            p: report.omnibus_p,
                            significant: false,
                            pairwise: false,
                        },
                    }
                })
                .collect();
            (dataset.clone(), cells)
        })
        .collect();

    let no_significance_counts = (0..columns.len())
        .map(|j| rows.iter().filter(|(_, cells)| !cells[j].significant).count())
        .collect();

    TableGrid {
        metric: metric.to_string(),
        reference: reference.to_string(),
        columns: columns.to_vec(),
        rows,
        no_significance_counts,
    }
}

fn format_cell(cell: &GridCell) -> String {
    format!("{:.4}{}", cell.p, if cell.significant { "*" } else { "" })
}

impl TableGrid {
    /// Plain-text rendering: one row per dataset, `*` marking significant
    /// cells, and the per-column no-significant-difference tally at the
    /// bottom.
    pub fn render_text(&self) -> String {
        const TALLY: &str = "no significant difference";
        let label_width = self
            .rows
            .iter()
            .map(|(d, _)| d.len())
            .chain([TALLY.len(), "dataset".len()])
            .max()
            .unwrap_or(0);
        let widths: Vec<usize> = self.columns.iter().map(|c| c.len().max(7)).collect();

        let mut out = format!("{} vs {} (reference)\n", self.metric, self.reference);
        out.push_str(&format!("{:<label_width$}", "dataset"));
        for (column, w) in self.columns.iter().zip(&widths) {
            out.push_str(&format!("  {column:>w$}"));
        }
        out.push('\n');
        for (dataset, cells) in &self.rows {
            out.push_str(&format!("{dataset:<label_width$}"));
            for (cell, w) in cells.iter().zip(&widths) {
                out.push_str(&format!("  {:>w$}", format_cell(cell)));
            }
            out.push('\n');
        }
        out.push_str(&format!("{TALLY:<label_width$}"));
        for (count, w) in self.no_significance_counts.iter().zip(&widths) {
            out.push_str(&format!("  {count:>w$}"));
        }
        out.push('\n');
        out
    }

    /// CSV rendering with the same shape as the text grid; significant cells
    /// keep their `*` marker.
    pub fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["dataset".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (dataset, cells) in &self.rows {
            let mut record = vec![dataset.clone()];
            record.extend(cells.iter().map(format_cell));
            w.write_record(&record).expect("in-memory write");
        }
        let mut tally = vec!["no_significant_difference".to_string()];
        tally.extend(self.no_significance_counts.iter().map(|c| c.to_string()));
        w.write_record(&tally).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("no io errors")).expect("csv is utf-8")
    }
}
