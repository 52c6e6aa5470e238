//! Evaluation metrics: citation counts, h-index, g-index and percentile aggregates.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Publication};
use crate::error::{domain, eligibility, Result};
use crate::math;
use crate::Age;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Publication,
    Scholar,
}

/// Which per-publication percentile summary feeds a scholar aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PubWindow {
    /// The publication's percentile at a fixed age (5 for P5, 10 for P10).
    FixedAge(Age),
    /// Summaries over the publication's series, ages `1..=min(30, observed)`.
    Max,
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregator {
    Sum,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetricKind {
    Citations,
    HIndex,
    GIndex,
    PercentileAggregate { window: PubWindow, aggregator: Aggregator },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub target: Target,
    pub kind: MetricKind,
}

impl MetricSpec {
    pub const fn publication_citations() -> Self {
        Self {
            target: Target::Publication,
            kind: MetricKind::Citations,
        }
    }

    pub const fn scholar(kind: MetricKind) -> Self {
        Self {
            target: Target::Scholar,
            kind,
        }
    }

    pub const fn scholar_citations() -> Self {
        Self::scholar(MetricKind::Citations)
    }

    pub const fn h_index() -> Self {
        Self::scholar(MetricKind::HIndex)
    }

    pub const fn g_index() -> Self {
        Self::scholar(MetricKind::GIndex)
    }

    pub const fn aggregate(window: PubWindow, aggregator: Aggregator) -> Self {
        Self::scholar(MetricKind::PercentileAggregate { window, aggregator })
    }

    /// The default scholar indicator: sum of publication percentiles at age 5.
    pub const fn p5_sum() -> Self {
        Self::aggregate(PubWindow::FixedAge(5), Aggregator::Sum)
    }

    pub const fn p5_median() -> Self {
        Self::aggregate(PubWindow::FixedAge(5), Aggregator::Median)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.target, self.kind) {
            (Target::Publication, MetricKind::Citations) => Ok(()),
            (Target::Publication, kind) => Err(domain!("{:?} is only defined for scholars", kind)),
            (
                Target::Scholar,
                MetricKind::PercentileAggregate {
                    window: PubWindow::FixedAge(0),
                    ..
                },
            ) => Err(domain!("fixed publication age must be at least 1")),
            (Target::Scholar, _) => Ok(()),
        }
    }
}

/// Cumulative citations of a publication by age `t`.
pub fn citations_at_age(p: &Publication, t: Age, end_year: i32) -> Result<u64> {
    if t < 1 {
        return Err(domain!("age must be at least 1, got {}", t));
    }
    let observed = end_year - p.pub_year + 1;
    if observed < t as i32 {
        return Err(eligibility!(
            "publication {} has {} observed years, needs {}",
            p.pub_id,
            observed,
            t
        ));
    }
    Ok(p.cumulative_at_age(t))
}

/// Citations a scholar receives over the calendar years of their age-`t` window.
pub fn scholar_citations_at_age(corpus: &Corpus, scholar_id: &str, t: Age) -> Result<u64> {
    let si = scholar_slot(corpus, scholar_id, t)?;
    Ok(scholar_window_citations(corpus, si, t).iter().sum())
}

fn scholar_slot(corpus: &Corpus, scholar_id: &str, t: Age) -> Result<usize> {
    if t < 1 {
        return Err(domain!("age must be at least 1, got {}", t));
    }
    let si = corpus
        .scholar_index(scholar_id)
        .ok_or_else(|| domain!("unknown scholar {}", scholar_id))?;
    if corpus.scholar_observed_years(si) < t {
        return Err(eligibility!("scholar {} is younger than {} years", scholar_id, t));
    }
    Ok(si)
}

/// Per-publication citations inside the scholar's age-`t` window, for every
/// publication published within the window.
pub(crate) fn scholar_window_citations(corpus: &Corpus, si: usize, t: Age) -> Vec<u64> {
    let s = &corpus.scholars()[si];
    let last = s.year_at_age(t);
    corpus
        .pubs_of(si)
        .iter()
        .map(|&pi| &corpus.publications()[pi])
        .filter(|p| p.pub_year <= last)
        .map(|p| p.history.in_years(s.career_start, last))
        .collect()
}

/// Largest `h` such that at least `h` entries are `>= h`.
pub fn h_index(citation_counts: &[u64]) -> u64 {
    let mut sorted = citation_counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .enumerate()
        .take_while(|(i, &c)| c > *i as u64)
        .count() as u64
}

/// Largest `g` (capped at the number of papers) whose top-`g` papers total at
/// least `g²` citations.
pub fn g_index(citation_counts: &[u64]) -> u64 {
    let mut sorted = citation_counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut cumulative: u128 = 0;
    let mut g = 0;
    for (i, &c) in sorted.iter().enumerate() {
        cumulative += u128::from(c);
        let rank = i as u128 + 1;
        if cumulative >= rank * rank {
            g = i as u64 + 1;
        }
    }
    g
}

/// Sum or median of a non-empty set of summaries. Sums run in the given order.
pub fn aggregate(values: &[f64], aggregator: Aggregator) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    match aggregator {
        Aggregator::Sum => Some(values.iter().fold(0.0, |acc, v| acc + v)),
        Aggregator::Median => math::median(values),
    }
}

/// Aggregates the percentile summaries of the publications a scholar wrote by
/// age `t`. Publications absent from `pub_percentiles` are not eligible (for a
/// fixed-age window: fewer observed years than the window) and are skipped.
/// Summation runs in pub_id order.
pub fn scholar_percentile_aggregate(
    corpus: &Corpus,
    scholar_id: &str,
    pub_percentiles: &BTreeMap<alloc::string::String, f64>,
    spec: &MetricSpec,
    t: Age,
) -> Result<f64> {
    spec.validate()?;
    let MetricKind::PercentileAggregate { aggregator, .. } = spec.kind else {
        return Err(domain!("{:?} is not a percentile aggregate", spec.kind));
    };
    let si = scholar_slot(corpus, scholar_id, t)?;
    let last = corpus.scholars()[si].year_at_age(t);
    let values: Vec<f64> = corpus
        .pubs_of(si)
        .iter()
        .map(|&pi| &corpus.publications()[pi])
        .filter(|p| p.pub_year <= last)
        .filter_map(|p| pub_percentiles.get(&p.pub_id).copied())
        .collect();
    aggregate(&values, aggregator)
        .ok_or_else(|| eligibility!("scholar {} has no eligible publications at age {}", scholar_id, t))
}
