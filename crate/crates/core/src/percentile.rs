//! Hazen rank percentiles and the publication, scholar and future-works series built on them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{filter_benchmark, BenchmarkSpec, Corpus};
use crate::error::{domain, eligibility, Result};
use crate::metrics::{aggregate, g_index, h_index, scholar_window_citations, Aggregator, MetricKind, MetricSpec, PubWindow, Target};
use crate::{math, Age, MAX_AGE};

/// Entity id to percentile.
pub type PercentileMap = BTreeMap<String, f64>;

/// Twice the average ascending rank of every value (ranks start at 1), so tied
/// blocks stay integral. A block occupying sorted positions `start..end` gets
/// `start + end + 1`.
pub fn doubled_midranks(values: &[f64]) -> Result<Vec<u64>> {
    if values.is_empty() {
        return Err(domain!("cannot rank an empty list"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(domain!("cannot rank non-finite value {}", v));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
    let mut ranks = vec![0u64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let v = values[order[start]];
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == v {
            end += 1;
        }
        for &i in &order[start..end] {
            ranks[i] = (start + end + 1) as u64;
        }
        start = end;
    }
    Ok(ranks)
}

/// `(r - 0.5) / N` with average ranks `r` for ties.
pub fn hazen_percentiles(values: &[f64]) -> Result<Vec<f64>> {
    let n2 = 2.0 * values.len() as f64;
    Ok(doubled_midranks(values)?
        .into_iter()
        .map(|d| (d - 1) as f64 / n2)
        .collect())
}

/// Percentiles over a population where some members are not ranked.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranked {
    /// Indexed like the population; `None` for members outside the ranking.
    pub percentiles: Vec<Option<f64>>,
    /// Number of ranked members.
    pub n: usize,
}

impl Ranked {
    pub fn from_values(values: &[Option<f64>]) -> Result<Self> {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        if present.is_empty() {
            return Err(eligibility!("no eligible entities to rank"));
        }
        let mut ranked = hazen_percentiles(&present)?.into_iter();
        let percentiles = values.iter().map(|v| v.and_then(|_| ranked.next())).collect();
        Ok(Self {
            percentiles,
            n: present.len(),
        })
    }

    /// Smallest attainable percentile if one more member tied at the bottom.
    pub fn floor_value(&self) -> f64 {
        0.5 / (self.n + 1) as f64
    }
}

/// A corpus restricted to one benchmark, with the ranking operations over it.
#[derive(Debug, Clone)]
pub struct Benchmark {
    corpus: Corpus,
    spec: BenchmarkSpec,
}

impl Benchmark {
    pub fn new(corpus: &Corpus, spec: &BenchmarkSpec) -> Result<Self> {
        Ok(Self {
            corpus: filter_benchmark(corpus, spec)?,
            spec: spec.clone(),
        })
    }

    /// Wraps a corpus that is already the benchmark population.
    pub fn from_filtered(corpus: Corpus, spec: BenchmarkSpec) -> Self {
        Self { corpus, spec }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn spec(&self) -> &BenchmarkSpec {
        &self.spec
    }

    /// Cumulative citations by age `t`, `None` for publications with fewer
    /// than `t` observed years.
    pub fn pub_citations(&self, t: Age) -> Vec<Option<u64>> {
        let c = &self.corpus;
        c.publications()
            .iter()
            .enumerate()
            .map(|(pi, p)| (c.pub_observed_years(pi) >= t).then(|| p.cumulative_at_age(t)))
            .collect()
    }

    /// Citations received in the single year of age `t`.
    pub fn pub_yearly_citations(&self, t: Age) -> Vec<Option<u64>> {
        let c = &self.corpus;
        c.publications()
            .iter()
            .enumerate()
            .map(|(pi, p)| (c.pub_observed_years(pi) >= t).then(|| p.yearly_at_age(t)))
            .collect()
    }

    /// P_c at age `t` for every publication of the benchmark.
    pub fn pub_percentiles(&self, t: Age) -> Result<Ranked> {
        check_age(t)?;
        Ranked::from_values(&as_real(&self.pub_citations(t)))
    }

    /// Percentile of the age-`t` yearly citations among publications observed through `t`.
    pub fn pub_yearly_percentiles(&self, t: Age) -> Result<Ranked> {
        check_age(t)?;
        Ranked::from_values(&as_real(&self.pub_yearly_citations(t)))
    }

    /// Per-publication percentile summaries for a scholar aggregate. `None`
    /// marks publications without the history the window needs.
    pub fn pub_summaries(&self, window: PubWindow) -> Result<Vec<Option<f64>>> {
        let n = self.corpus.publications().len();
        match window {
            PubWindow::FixedAge(k) => {
                check_age(k)?;
                match self.pub_percentiles(k) {
                    Ok(r) => Ok(r.percentiles),
                    Err(crate::Error::Eligibility(_)) => Ok(vec![None; n]),
                    Err(e) => Err(e),
                }
            }
            PubWindow::Max | PubWindow::Mean | PubWindow::Median => {
                let mut series: Vec<Vec<f64>> = vec![Vec::new(); n];
                for t in 1..=MAX_AGE {
                    let Ok(r) = self.pub_percentiles(t) else { break };
                    for (s, p) in series.iter_mut().zip(r.percentiles) {
                        if let Some(p) = p {
                            s.push(p);
                        }
                    }
                }
                Ok(series
                    .iter()
                    .map(|s| match window {
                        _ if s.is_empty() => None,
                        PubWindow::Max => s.iter().copied().reduce(f64::max),
                        PubWindow::Mean => Some(math::mean(s)),
                        _ => math::median(s),
                    })
                    .collect())
            }
        }
    }

    /// Summaries needed by `metric`, or `None` for metrics that do not use them.
    pub fn summaries_for(&self, metric: &MetricSpec) -> Result<Option<Vec<Option<f64>>>> {
        match metric.kind {
            MetricKind::PercentileAggregate { window, .. } => Ok(Some(self.pub_summaries(window)?)),
            _ => Ok(None),
        }
    }

    /// Scholar metric values at age `t`; `None` for scholars younger than `t`
    /// or (for aggregates) without any summarised publication by `t`.
    ///
    /// `summaries` must come from [`Benchmark::summaries_for`] for aggregate metrics.
    pub fn scholar_values(
        &self,
        metric: &MetricSpec,
        t: Age,
        summaries: Option<&[Option<f64>]>,
    ) -> Result<Vec<Option<f64>>> {
        metric.validate()?;
        check_age(t)?;
        if metric.target != Target::Scholar {
            return Err(domain!("metric {:?} does not rank scholars", metric));
        }
        let c = &self.corpus;
        let owned;
        let summaries = match (metric.kind, summaries) {
            (MetricKind::PercentileAggregate { .. }, None) => {
                owned = self.summaries_for(metric)?.expect("aggregate");
                Some(owned.as_slice())
            }
            (_, s) => s,
        };
        Ok((0..c.scholars().len())
            .map(|si| {
                if c.scholar_observed_years(si) < t {
                    return None;
                }
                match metric.kind {
                    MetricKind::Citations => {
                        Some(scholar_window_citations(c, si, t).iter().sum::<u64>() as f64)
                    }
                    MetricKind::HIndex => Some(h_index(&scholar_window_citations(c, si, t)) as f64),
                    MetricKind::GIndex => Some(g_index(&scholar_window_citations(c, si, t)) as f64),
                    MetricKind::PercentileAggregate { aggregator, .. } => {
                        let last = c.scholars()[si].year_at_age(t);
                        self.aggregate_pubs(si, summaries.expect("summaries"), aggregator, |y| y <= last)
                    }
                }
            })
            .collect())
    }

    /// Aggregates the summaries of scholar `si`'s publications whose year passes `keep`.
    pub fn aggregate_pubs(
        &self,
        si: usize,
        summaries: &[Option<f64>],
        aggregator: Aggregator,
        keep: impl Fn(i32) -> bool,
    ) -> Option<f64> {
        let c = &self.corpus;
        let vals: Vec<f64> = c
            .pubs_of(si)
            .iter()
            .filter(|&&pi| keep(c.publications()[pi].pub_year))
            .filter_map(|&pi| summaries[pi])
            .collect();
        aggregate(&vals, aggregator)
    }

    pub fn scholar_percentiles(
        &self,
        metric: &MetricSpec,
        t: Age,
        summaries: Option<&[Option<f64>]>,
    ) -> Result<Ranked> {
        Ranked::from_values(&self.scholar_values(metric, t, summaries)?)
    }

    /// S_P5 restricted to publications written in scholar ages `(t1, t2]`, for
    /// scholars observed through `t2`. `p5` are the age-5 publication percentiles.
    pub fn future_works_values(&self, p5: &[Option<f64>], t1: Age, t2: Age) -> Result<Vec<Option<f64>>> {
        check_age(t1)?;
        if t2 <= t1 {
            return Err(domain!("t2 ({}) must exceed t1 ({})", t2, t1));
        }
        let c = &self.corpus;
        Ok((0..c.scholars().len())
            .map(|si| {
                if c.scholar_observed_years(si) < t2 {
                    return None;
                }
                let s = &c.scholars()[si];
                let (from, to) = (s.year_at_age(t1 + 1), s.year_at_age(t2));
                self.aggregate_pubs(si, p5, Aggregator::Sum, |y| (from..=to).contains(&y))
            })
            .collect())
    }

    pub fn future_works_percentiles(&self, p5: &[Option<f64>], t1: Age, t2: Age) -> Result<Ranked> {
        Ranked::from_values(&self.future_works_values(p5, t1, t2)?)
    }

    /// Publication id to percentile for the ranked entries of `r`.
    pub fn pub_map(&self, r: &Ranked) -> PercentileMap {
        let pubs = self.corpus.publications();
        r.percentiles
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (pubs[i].pub_id.clone(), p)))
            .collect()
    }

    /// Scholar id to percentile for the ranked entries of `r`.
    pub fn scholar_map(&self, r: &Ranked) -> PercentileMap {
        let scholars = self.corpus.scholars();
        r.percentiles
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (scholars[i].scholar_id.clone(), p)))
            .collect()
    }
}

fn check_age(t: Age) -> Result<()> {
    if t < 1 {
        return Err(domain!("age must be at least 1, got {}", t));
    }
    Ok(())
}

fn as_real(v: &[Option<u64>]) -> Vec<Option<f64>> {
    v.iter().map(|c| c.map(|c| c as f64)).collect()
}

/// P_c(t) for every eligible publication of the benchmark.
pub fn publication_percentile(corpus: &Corpus, bench: &BenchmarkSpec, t: Age) -> Result<PercentileMap> {
    let b = Benchmark::new(corpus, bench)?;
    let r = b.pub_percentiles(t)?;
    Ok(b.pub_map(&r))
}

/// Scholar percentiles under `metric` at age `t`.
pub fn scholar_percentile(corpus: &Corpus, bench: &BenchmarkSpec, metric: &MetricSpec, t: Age) -> Result<PercentileMap> {
    let b = Benchmark::new(corpus, bench)?;
    let r = b.scholar_percentiles(metric, t, None)?;
    Ok(b.scholar_map(&r))
}

/// S_P5(t2|t1) for every scholar observed through `t2` with publications in `(t1, t2]`.
pub fn future_works_percentile(corpus: &Corpus, bench: &BenchmarkSpec, t1: Age, t2: Age) -> Result<PercentileMap> {
    let b = Benchmark::new(corpus, bench)?;
    let p5 = b.pub_summaries(PubWindow::FixedAge(5))?;
    let r = b.future_works_percentiles(&p5, t1, t2)?;
    Ok(b.scholar_map(&r))
}

/// Scholar percentiles at age `t` grouped by career start year.
pub fn cohort_distribution(
    corpus: &Corpus,
    bench: &BenchmarkSpec,
    metric: &MetricSpec,
    t: Age,
) -> Result<BTreeMap<i32, Vec<f64>>> {
    let b = Benchmark::new(corpus, bench)?;
    let mut out: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    let r = match b.scholar_percentiles(metric, t, None) {
        Ok(r) => r,
        Err(crate::Error::Eligibility(_)) => return Ok(out),
        Err(e) => return Err(e),
    };
    for (s, p) in b.corpus().scholars().iter().zip(&r.percentiles) {
        if let Some(p) = p {
            out.entry(s.career_start).or_default().push(*p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileSeries {
    pub entity_id: String,
    pub benchmark: BenchmarkSpec,
    pub metric: MetricSpec,
    pub values: BTreeMap<Age, f64>,
    pub benchmark_size: BTreeMap<Age, usize>,
}

impl PercentileSeries {
    pub fn new(entity_id: impl Into<String>, benchmark: BenchmarkSpec, metric: MetricSpec) -> Self {
        Self {
            entity_id: entity_id.into(),
            benchmark,
            metric,
            values: BTreeMap::new(),
            benchmark_size: BTreeMap::new(),
        }
    }

    pub fn get(&self, t: Age) -> Option<f64> {
        self.values.get(&t).copied()
    }

    /// True when the series has a value at every age in `ages`.
    pub fn covers(&self, ages: impl IntoIterator<Item = Age>) -> bool {
        ages.into_iter().all(|t| self.values.contains_key(&t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FutureWorksSeries {
    pub scholar_id: String,
    pub t1: Age,
    pub values: BTreeMap<Age, f64>,
}

/// Assembles per-entity series from per-age rankings over the entities `ids`;
/// entities never ranked are dropped.
pub fn series_from_rankings(
    ids: &[&str],
    rankings: &[(Age, Ranked)],
    bench: &BenchmarkSpec,
    metric: MetricSpec,
) -> Vec<PercentileSeries> {
    let mut out: Vec<PercentileSeries> = ids
        .iter()
        .map(|id| PercentileSeries::new(*id, bench.clone(), metric))
        .collect();
    for (t, r) in rankings {
        for (s, p) in out.iter_mut().zip(&r.percentiles) {
            if let Some(p) = p {
                s.values.insert(*t, *p);
                s.benchmark_size.insert(*t, r.n);
            }
        }
    }
    out.retain(|s| !s.values.is_empty());
    out
}

/// Publication series over `ages`. Ages with no eligible publication are skipped.
pub fn publication_series(b: &Benchmark, ages: &[Age]) -> Result<Vec<PercentileSeries>> {
    let mut rankings = Vec::new();
    for &t in ages {
        match b.pub_percentiles(t) {
            Ok(r) => rankings.push((t, r)),
            Err(crate::Error::Eligibility(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let ids: Vec<&str> = b.corpus().publications().iter().map(|p| p.pub_id.as_str()).collect();
    Ok(series_from_rankings(&ids, &rankings, b.spec(), MetricSpec::publication_citations()))
}

/// Scholar series over `ages`. Ages with no eligible scholar are skipped.
pub fn scholar_series(b: &Benchmark, metric: &MetricSpec, ages: &[Age]) -> Result<Vec<PercentileSeries>> {
    let summaries = b.summaries_for(metric)?;
    let mut rankings = Vec::new();
    for &t in ages {
        match b.scholar_percentiles(metric, t, summaries.as_deref()) {
            Ok(r) => rankings.push((t, r)),
            Err(crate::Error::Eligibility(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let ids: Vec<&str> = b.corpus().scholars().iter().map(|s| s.scholar_id.as_str()).collect();
    Ok(series_from_rankings(&ids, &rankings, b.spec(), *metric))
}

/// Future-works series for a fixed `t1` over the horizons `t2s`.
pub fn future_works_series(b: &Benchmark, t1: Age, t2s: &[Age]) -> Result<Vec<FutureWorksSeries>> {
    let p5 = b.pub_summaries(PubWindow::FixedAge(5))?;
    let mut out: Vec<FutureWorksSeries> = b
        .corpus()
        .scholars()
        .iter()
        .map(|s| FutureWorksSeries {
            scholar_id: s.scholar_id.clone(),
            t1,
            values: BTreeMap::new(),
        })
        .collect();
    for &t2 in t2s {
        let r = match b.future_works_percentiles(&p5, t1, t2) {
            Ok(r) => r,
            Err(crate::Error::Eligibility(_)) => continue,
            Err(e) => return Err(e),
        };
        for (s, p) in out.iter_mut().zip(&r.percentiles) {
            if let Some(p) = p {
                s.values.insert(t2, *p);
            }
        }
    }
    out.retain(|s| !s.values.is_empty());
    Ok(out)
}
