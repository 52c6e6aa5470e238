//! Feature matrices for the publication, scholar and future-works prediction tasks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{BenchmarkSpec, Corpus};
use crate::error::{domain, eligibility, Result};
use crate::metrics::{g_index, h_index, Aggregator, MetricSpec, PubWindow};
use crate::percentile::{Benchmark, Ranked};
use crate::{math, Age, MAX_AGE};

pub const PUBLICATION_BASE: [&str; 15] = [
    "pub_cit_cumulative",
    "pub_cit_yearly",
    "pub_cit_peryear",
    "pub_rp_cumulative",
    "pub_rp_yearly",
    "aut_cit_cumulative",
    "aut_cit_yearly",
    "aut_npub_cumulative",
    "aut_npub_yearly",
    "aut_cit_perpaper",
    "aut_h_index",
    "aut_g_index",
    "aut_maxcit_pub",
    "aut_rprp5_cumulative",
    "aut_rprp5_yearly",
];

pub const SCHOLAR_BASE: [&str; 21] = [
    "aut_cit_cumulative",
    "aut_cit_yearly",
    "aut_npub_cumulative",
    "aut_npub_yearly",
    "aut_h_index",
    "aut_g_index",
    "aut_cit_peryear",
    "aut_rprp5_cumulative",
    "aut_rprp5_yearly",
    "pub_cit_cumulative_min",
    "pub_cit_cumulative_mean",
    "pub_cit_cumulative_max",
    "pub_cit_yearly_min",
    "pub_cit_yearly_mean",
    "pub_cit_yearly_max",
    "pub_rp_cumulative_min",
    "pub_rp_cumulative_mean",
    "pub_rp_cumulative_max",
    "pub_rp_yearly_min",
    "pub_rp_yearly_mean",
    "pub_rp_yearly_max",
];

/// Base columns followed by their `_delta` companions.
fn with_deltas(base: &[&str]) -> Vec<String> {
    base.iter()
        .map(|b| String::from(*b))
        .chain(base.iter().map(|b| format!("{b}_delta")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TargetKind {
    Publication,
    Scholar,
    FutureWorks,
}

impl TargetKind {
    pub const ALL: [TargetKind; 3] = [TargetKind::Publication, TargetKind::Scholar, TargetKind::FutureWorks];

    pub fn target_name(self) -> &'static str {
        match self {
            TargetKind::Publication => "delta_pub_percentile",
            TargetKind::Scholar => "delta_scholar_percentile",
            TargetKind::FutureWorks => "delta_future_works_percentile",
        }
    }

    pub fn columns(self) -> Vec<String> {
        match self {
            TargetKind::Publication => with_deltas(&PUBLICATION_BASE),
            _ => with_deltas(&SCHOLAR_BASE),
        }
    }

    /// The column holding the value the target is differenced against.
    pub fn autoregressive_column(self) -> &'static str {
        match self {
            TargetKind::Publication => "pub_rp_cumulative",
            _ => "aut_rprp5_cumulative",
        }
    }

    pub fn markov_column(self) -> &'static str {
        match self {
            TargetKind::Publication => "pub_rp_cumulative_delta",
            _ => "aut_rprp5_cumulative_delta",
        }
    }

    pub fn entity_is_publication(self) -> bool {
        self == TargetKind::Publication
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Task {
    pub kind: TargetKind,
    pub t1: Age,
    pub t2: Age,
}

impl Task {
    pub fn new(kind: TargetKind, t1: Age, t2: Age) -> Result<Self> {
        check_t1(t1)?;
        if t2 <= t1 {
            return Err(domain!("t2 ({}) must exceed t1 ({})", t2, t1));
        }
        if t2 > MAX_AGE {
            return Err(domain!("t2 ({}) beyond the {}-year horizon", t2, MAX_AGE));
        }
        Ok(Self { kind, t1, t2 })
    }
}

fn check_t1(t1: Age) -> Result<()> {
    if t1 < 3 {
        return Err(domain!("delta features need t1 >= 3, got {}", t1));
    }
    if t1 > MAX_AGE {
        return Err(domain!("t1 ({}) beyond the {}-year horizon", t1, MAX_AGE));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub entity_id: String,
    pub values: Vec<f64>,
    /// The publication has several owners; author features come from the one
    /// with the most citations through t1.
    pub ambiguous_owner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub task: Task,
    pub entity_ids: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub ambiguous_owner: Vec<bool>,
    pub target: Vec<f64>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn target_name(&self) -> &'static str {
        self.task.kind.target_name()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn autoregressive(&self) -> Vec<f64> {
        self.column(self.task.kind.autoregressive_column()).expect("autoregressive column")
    }

    /// Level target: autoregressive value plus delta.
    pub fn level_target(&self) -> Vec<f64> {
        self.autoregressive().iter().zip(&self.target).map(|(a, d)| a + d).collect()
    }

    /// Rows at the given positions, in that order.
    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            task: self.task,
            entity_ids: idx.iter().map(|&i| self.entity_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            ambiguous_owner: idx.iter().map(|&i| self.ambiguous_owner[i]).collect(),
            target: idx.iter().map(|&i| self.target[i]).collect(),
        }
    }
}

const MISSING: f64 = f64::NAN;

fn ranked_dense(r: Result<Ranked>, n: usize) -> Result<(Vec<f64>, usize)> {
    match r {
        Ok(r) => Ok((r.percentiles.iter().map(|p| p.unwrap_or(MISSING)).collect(), r.n)),
        Err(crate::Error::Eligibility(_)) => Ok((vec![MISSING; n], 0)),
        Err(e) => Err(e),
    }
}

fn present(v: f64) -> Option<f64> {
    (!v.is_nan()).then_some(v)
}

struct AuthorStats {
    cit_cumulative: u64,
    cit_yearly: u64,
    npub_cumulative: usize,
    npub_yearly: usize,
    h: u64,
    g: u64,
    max_cit: u64,
}

/// Rankings shared by every row of one benchmark.
///
/// Publication rankings cover ages `1..=30`; scholar P5 rankings cover every
/// observed scholar age.
#[derive(Debug, Clone)]
pub struct FeatureContext {
    bench: Benchmark,
    pub_cumulative: Vec<Vec<f64>>,
    pub_yearly: Vec<Vec<f64>>,
    p5: Vec<Option<f64>>,
    sp5: Vec<(Vec<f64>, usize)>,
    sp5_yearly: Vec<Vec<f64>>,
}

impl FeatureContext {
    pub fn new(bench: Benchmark) -> Result<Self> {
        let c = bench.corpus();
        let np = c.publications().len();
        let ns = c.scholars().len();
        let mut pub_cumulative = Vec::with_capacity(MAX_AGE as usize);
        let mut pub_yearly = Vec::with_capacity(MAX_AGE as usize);
        for a in 1..=MAX_AGE {
            pub_cumulative.push(ranked_dense(bench.pub_percentiles(a), np)?.0);
            pub_yearly.push(ranked_dense(bench.pub_yearly_percentiles(a), np)?.0);
        }
        let p5 = bench.pub_summaries(PubWindow::FixedAge(5))?;
        let max_age = (0..ns).map(|si| c.scholar_observed_years(si)).max().unwrap_or(0);
        let metric = MetricSpec::p5_sum();
        let mut sp5 = Vec::with_capacity(max_age as usize);
        let mut sp5_yearly = Vec::with_capacity(max_age as usize);
        for u in 1..=max_age {
            sp5.push(ranked_dense(bench.scholar_percentiles(&metric, u, Some(&p5)), ns)?);
            let yearly: Vec<Option<f64>> = (0..ns)
                .map(|si| {
                    if c.scholar_observed_years(si) < u {
                        return None;
                    }
                    let y = c.scholars()[si].year_at_age(u);
                    Some(bench.aggregate_pubs(si, &p5, Aggregator::Sum, |py| py == y).unwrap_or(0.0))
                })
                .collect();
            sp5_yearly.push(ranked_dense(Ranked::from_values(&yearly), ns)?.0);
        }
        Ok(Self {
            bench,
            pub_cumulative,
            pub_yearly,
            p5,
            sp5,
            sp5_yearly,
        })
    }

    pub fn from_corpus(corpus: &Corpus, spec: &BenchmarkSpec) -> Result<Self> {
        Self::new(Benchmark::new(corpus, spec)?)
    }

    pub fn benchmark(&self) -> &Benchmark {
        &self.bench
    }

    pub fn corpus(&self) -> &Corpus {
        self.bench.corpus()
    }

    /// P_c(t) of publication `pi`.
    pub fn pub_percentile(&self, pi: usize, t: Age) -> Option<f64> {
        if !(1..=MAX_AGE).contains(&t) {
            return None;
        }
        present(self.pub_cumulative[t as usize - 1][pi])
    }

    fn pub_yearly_percentile(&self, pi: usize, t: Age) -> Option<f64> {
        if !(1..=MAX_AGE).contains(&t) {
            return None;
        }
        present(self.pub_yearly[t as usize - 1][pi])
    }

    /// S_P5(u) of scholar `si`.
    pub fn scholar_p5(&self, si: usize, u: Age) -> Option<f64> {
        self.sp5.get(u.checked_sub(1)? as usize).and_then(|(v, _)| present(v[si]))
    }

    /// S_P5(u), or the bottom tie value `0.5 / (N + 1)` for a ranked-out scholar.
    fn scholar_p5_or_floor(&self, si: usize, u: Age) -> f64 {
        match self.sp5.get(u as usize - 1) {
            Some((v, n)) => present(v[si]).unwrap_or(0.5 / (*n + 1) as f64),
            None => 0.5,
        }
    }

    fn scholar_p5_yearly(&self, si: usize, u: Age) -> f64 {
        self.sp5_yearly
            .get(u as usize - 1)
            .and_then(|v| present(v[si]))
            .unwrap_or(0.5)
    }

    /// S_P5(t2|t1) ranking over all scholars of the benchmark.
    pub fn future_works(&self, t1: Age, t2: Age) -> Result<Ranked> {
        self.bench.future_works_percentiles(&self.p5, t1, t2)
    }

    fn author_stats(&self, si: usize, year: i32) -> AuthorStats {
        let c = self.corpus();
        let start = c.scholars()[si].career_start;
        let mut window = Vec::new();
        let mut st = AuthorStats {
            cit_cumulative: 0,
            cit_yearly: 0,
            npub_cumulative: 0,
            npub_yearly: 0,
            h: 0,
            g: 0,
            max_cit: 0,
        };
        for &pi in c.pubs_of(si) {
            let p = &c.publications()[pi];
            if p.pub_year > year {
                continue;
            }
            let w = p.history.in_years(start, year);
            window.push(w);
            st.cit_cumulative += w;
            st.cit_yearly += p.history.get(year);
            st.npub_cumulative += 1;
            st.npub_yearly += usize::from(p.pub_year == year);
            st.max_cit = st.max_cit.max(w);
        }
        st.h = h_index(&window);
        st.g = g_index(&window);
        st
    }

    /// Publications observed for the full horizon.
    pub fn full_history_pubs(&self) -> Vec<usize> {
        let c = self.corpus();
        (0..c.publications().len())
            .filter(|&pi| c.pub_observed_years(pi) >= MAX_AGE)
            .collect()
    }

    /// Scholars observed for the full horizon.
    pub fn full_history_scholars(&self) -> Vec<usize> {
        let c = self.corpus();
        (0..c.scholars().len())
            .filter(|&si| c.scholar_observed_years(si) >= MAX_AGE)
            .collect()
    }

    fn publication_base(&self, pi: usize, owner: usize, t: Age) -> Vec<f64> {
        let c = self.corpus();
        let p = &c.publications()[pi];
        let year = p.year_at_age(t);
        let cum = p.cumulative_at_age(t) as f64;
        let a = self.author_stats(owner, year);
        let u = (year - c.scholars()[owner].career_start + 1) as Age;
        vec![
            cum,
            p.yearly_at_age(t) as f64,
            cum / f64::from(t),
            self.pub_percentile(pi, t).expect("observed publication"),
            self.pub_yearly_percentile(pi, t).expect("observed publication"),
            a.cit_cumulative as f64,
            a.cit_yearly as f64,
            a.npub_cumulative as f64,
            a.npub_yearly as f64,
            a.cit_cumulative as f64 / a.npub_cumulative as f64,
            a.h as f64,
            a.g as f64,
            a.max_cit as f64,
            self.scholar_p5_or_floor(owner, u),
            self.scholar_p5_yearly(owner, u),
        ]
    }

    /// Row of publication `pi` at age `t1`.
    pub fn publication_row(&self, pi: usize, t1: Age) -> Result<FeatureRow> {
        check_t1(t1)?;
        let c = self.corpus();
        let p = &c.publications()[pi];
        if c.pub_observed_years(pi) < t1 {
            return Err(eligibility!("publication {} is not observed through age {}", p.pub_id, t1));
        }
        let year = p.year_at_age(t1);
        let owners = c.owners_of(pi);
        let owner = *owners
            .iter()
            .max_by(|&&a, &&b| {
                self.author_stats(a, year)
                    .cit_cumulative
                    .cmp(&self.author_stats(b, year).cit_cumulative)
                    .then(b.cmp(&a))
            })
            .expect("publication has owners");
        Ok(FeatureRow {
            entity_id: p.pub_id.clone(),
            values: stack_deltas(self.publication_base(pi, owner, t1), self.publication_base(pi, owner, t1 - 2)),
            ambiguous_owner: owners.len() > 1,
        })
    }

    fn scholar_base(&self, si: usize, t: Age) -> Result<Vec<f64>> {
        let c = self.corpus();
        let s = &c.scholars()[si];
        let year = s.year_at_age(t);
        let a = self.author_stats(si, year);
        if a.npub_cumulative == 0 {
            return Err(eligibility!("scholar {} has no publications by age {}", s.scholar_id, t));
        }
        let mut cum = Vec::new();
        let mut yearly = Vec::new();
        let mut rp_cum = Vec::new();
        let mut rp_yearly = Vec::new();
        for &pi in c.pubs_of(si) {
            let p = &c.publications()[pi];
            if p.pub_year > year {
                continue;
            }
            let age = (year - p.pub_year + 1) as Age;
            cum.push(p.cumulative_at_age(age) as f64);
            yearly.push(p.history.get(year) as f64);
            rp_cum.push(self.pub_percentile(pi, age).unwrap_or(MISSING));
            rp_yearly.push(self.pub_yearly_percentile(pi, age).unwrap_or(MISSING));
        }
        let mut v = vec![
            a.cit_cumulative as f64,
            a.cit_yearly as f64,
            a.npub_cumulative as f64,
            a.npub_yearly as f64,
            a.h as f64,
            a.g as f64,
            a.cit_cumulative as f64 / f64::from(t),
            self.scholar_p5_or_floor(si, t),
            self.scholar_p5_yearly(si, t),
        ];
        for xs in [&cum, &yearly, &rp_cum, &rp_yearly] {
            let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            v.extend([min, math::mean(xs), max]);
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(eligibility!("scholar {} has publications older than the horizon", s.scholar_id));
        }
        Ok(v)
    }

    /// Row of scholar `si` at age `t1`.
    pub fn scholar_row(&self, si: usize, t1: Age) -> Result<FeatureRow> {
        check_t1(t1)?;
        let c = self.corpus();
        let s = &c.scholars()[si];
        if c.scholar_observed_years(si) < t1 {
            return Err(eligibility!("scholar {} is not observed through age {}", s.scholar_id, t1));
        }
        Ok(FeatureRow {
            entity_id: s.scholar_id.clone(),
            values: stack_deltas(self.scholar_base(si, t1)?, self.scholar_base(si, t1 - 2)?),
            ambiguous_owner: false,
        })
    }

    /// Entities of a task: full-horizon publications or scholars.
    pub fn entities(&self, kind: TargetKind) -> Vec<usize> {
        if kind.entity_is_publication() {
            self.full_history_pubs()
        } else {
            self.full_history_scholars()
        }
    }

    pub fn row(&self, kind: TargetKind, idx: usize, t1: Age) -> Result<FeatureRow> {
        if kind.entity_is_publication() {
            self.publication_row(idx, t1)
        } else {
            self.scholar_row(idx, t1)
        }
    }

    /// Level value at `t2` for each entity (`None` when the entity is not ranked).
    pub fn target_levels(&self, task: Task, entities: &[usize]) -> Result<Vec<Option<f64>>> {
        Ok(match task.kind {
            TargetKind::Publication => entities.iter().map(|&pi| self.pub_percentile(pi, task.t2)).collect(),
            TargetKind::Scholar => entities.iter().map(|&si| self.scholar_p5(si, task.t2)).collect(),
            TargetKind::FutureWorks => {
                let r = match self.future_works(task.t1, task.t2) {
                    Ok(r) => r.percentiles,
                    Err(crate::Error::Eligibility(_)) => vec![None; self.corpus().scholars().len()],
                    Err(e) => return Err(e),
                };
                entities.iter().map(|&si| r[si]).collect()
            }
        })
    }

    /// Assembles a matrix from precomputed rows (as returned by [`FeatureContext::row`]
    /// for `entities`, in the same order). Entities without a target are dropped.
    pub fn matrix_from_rows(&self, task: Task, entities: &[usize], rows: Vec<FeatureRow>) -> Result<FeatureMatrix> {
        let levels = self.target_levels(task, entities)?;
        let ar = task.kind.columns().iter().position(|c| c == task.kind.autoregressive_column()).expect("column");
        let mut m = FeatureMatrix {
            task,
            entity_ids: Vec::new(),
            columns: task.kind.columns(),
            rows: Vec::new(),
            ambiguous_owner: Vec::new(),
            target: Vec::new(),
        };
        for (row, level) in rows.into_iter().zip(levels) {
            let Some(level) = level else { continue };
            m.target.push(level - row.values[ar]);
            m.entity_ids.push(row.entity_id);
            m.ambiguous_owner.push(row.ambiguous_owner);
            m.rows.push(row.values);
        }
        if m.is_empty() {
            return Err(eligibility!("no entity has both features and a target for {:?}", task));
        }
        Ok(m)
    }

    pub fn matrix(&self, task: Task) -> Result<FeatureMatrix> {
        let entities = self.entities(task.kind);
        let rows = entities
            .iter()
            .map(|&i| self.row(task.kind, i, task.t1))
            .collect::<Result<Vec<_>>>()?;
        self.matrix_from_rows(task, &entities, rows)
    }
}

fn stack_deltas(now: Vec<f64>, before: Vec<f64>) -> Vec<f64> {
    let deltas: Vec<f64> = now.iter().zip(&before).map(|(a, b)| a - b).collect();
    let mut v = now;
    v.extend(deltas);
    v
}

/// Feature row of one publication at age `t1`.
pub fn publication_features(corpus: &Corpus, bench: &BenchmarkSpec, pub_id: &str, t1: Age) -> Result<FeatureRow> {
    check_t1(t1)?;
    let ctx = FeatureContext::from_corpus(corpus, bench)?;
    let pi = ctx
        .corpus()
        .publication_index(pub_id)
        .ok_or_else(|| domain!("publication {} is not in the benchmark", pub_id))?;
    ctx.publication_row(pi, t1)
}

/// Feature row of one scholar at age `t1`.
pub fn scholar_features(corpus: &Corpus, bench: &BenchmarkSpec, scholar_id: &str, t1: Age) -> Result<FeatureRow> {
    check_t1(t1)?;
    let ctx = FeatureContext::from_corpus(corpus, bench)?;
    let si = ctx
        .corpus()
        .scholar_index(scholar_id)
        .ok_or_else(|| domain!("scholar {} is not in the benchmark", scholar_id))?;
    ctx.scholar_row(si, t1)
}

/// Feature matrix of a task over the full-horizon entities of a benchmark.
pub fn assemble(corpus: &Corpus, bench: &BenchmarkSpec, task: Task) -> Result<FeatureMatrix> {
    let task = Task::new(task.kind, task.t1, task.t2)?;
    FeatureContext::from_corpus(corpus, bench)?.matrix(task)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Publication, ScholarInfo};
    use crate::percentile::{publication_percentile, scholar_percentile};

    fn info(id: &str) -> ScholarInfo {
        ScholarInfo {
            scholar_id: id.into(),
            interests: vec![],
            tenured: false,
        }
    }

    fn flat(id: &str, s: &str, year: i32, per_year: u64) -> Publication {
        Publication::new(id, s, year).with_history((year..=2016).map(|y| (y, per_year)).collect())
    }

    fn fixture() -> Corpus {
        Corpus::new(
            2016,
            vec![info("a"), info("b")],
            vec![
                flat("u", "a", 2000, 2),
                flat("v", "a", 2002, 5),
                flat("w", "b", 2001, 0),
                flat("x", "b", 2003, 1),
            ],
        )
        .unwrap()
    }

    fn col(name: &str, base: &[&str]) -> usize {
        with_deltas(base).iter().position(|c| c == name).unwrap()
    }

    #[test]
    fn column_counts() {
        assert_eq!(TargetKind::Publication.columns().len(), 30);
        assert_eq!(TargetKind::Scholar.columns().len(), 42);
        assert_eq!(TargetKind::FutureWorks.columns().len(), 42);
    }

    #[test]
    fn uniform_publication() {
        let c = fixture();
        let r = publication_features(&c, &BenchmarkSpec::all(), "u", 5).unwrap();
        let at = |n: &str| r.values[col(n, &PUBLICATION_BASE)];
        assert_eq!(at("pub_cit_cumulative"), 10.0);
        assert_eq!(at("pub_cit_yearly"), 2.0);
        assert_eq!(at("pub_cit_peryear"), 2.0);
        assert_eq!(at("pub_cit_cumulative_delta"), 4.0);
        assert_eq!(at("pub_cit_yearly_delta"), 0.0);
        assert_eq!(at("pub_cit_peryear_delta"), 0.0);
        let p = publication_percentile(&c, &BenchmarkSpec::all(), 5).unwrap();
        assert_eq!(at("pub_rp_cumulative"), p["u"]);
        assert!(matches!(
            publication_features(&c, &BenchmarkSpec::all(), "u", 2),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn zero_citation_publication() {
        let c = fixture();
        let r = publication_features(&c, &BenchmarkSpec::all(), "w", 6).unwrap();
        let at = |n: &str| r.values[col(n, &PUBLICATION_BASE)];
        for n in ["pub_cit_cumulative", "pub_cit_yearly", "pub_cit_peryear"] {
            assert_eq!(at(n), 0.0);
        }
        // w is the only zero at every age: lowest rank among the four publications
        assert_eq!(at("pub_rp_cumulative"), 0.125);
        assert_eq!(at("pub_rp_yearly"), 0.125);
    }

    #[test]
    fn author_features_use_owner_window() {
        let c = fixture();
        let r = publication_features(&c, &BenchmarkSpec::all(), "v", 3).unwrap();
        let at = |n: &str| r.values[col(n, &PUBLICATION_BASE)];
        // year 2004: u has 10 citations, v has 15
        assert_eq!(at("aut_cit_cumulative"), 25.0);
        assert_eq!(at("aut_cit_yearly"), 7.0);
        assert_eq!(at("aut_npub_cumulative"), 2.0);
        assert_eq!(at("aut_npub_yearly"), 0.0);
        assert_eq!(at("aut_cit_perpaper"), 12.5);
        assert_eq!(at("aut_h_index"), 2.0);
        assert_eq!(at("aut_g_index"), 2.0);
        assert_eq!(at("aut_maxcit_pub"), 15.0);
        let s = scholar_percentile(&c, &BenchmarkSpec::all(), &MetricSpec::p5_sum(), 5).unwrap();
        assert_eq!(at("aut_rprp5_cumulative"), s["a"]);
        assert!(!r.ambiguous_owner);
    }

    #[test]
    fn scholar_rows() {
        let c = Corpus::new(
            2016,
            vec![info("s"), info("one")],
            vec![flat("p", "s", 2000, 3), flat("q", "s", 2000, 5), flat("r", "one", 2000, 1)],
        )
        .unwrap();
        let r = scholar_features(&c, &BenchmarkSpec::all(), "s", 3).unwrap();
        let at = |n: &str| r.values[col(n, &SCHOLAR_BASE)];
        assert_eq!(at("pub_cit_cumulative_min"), 9.0);
        assert_eq!(at("pub_cit_cumulative_mean"), 12.0);
        assert_eq!(at("pub_cit_cumulative_max"), 15.0);
        let s = scholar_percentile(&c, &BenchmarkSpec::all(), &MetricSpec::p5_sum(), 3).unwrap();
        assert_eq!(at("aut_rprp5_cumulative"), s["s"]);
        let one = scholar_features(&c, &BenchmarkSpec::all(), "one", 4).unwrap();
        for stem in ["pub_cit_cumulative", "pub_cit_yearly", "pub_rp_cumulative", "pub_rp_yearly"] {
            let v = |suffix: &str| one.values[col(&format!("{stem}_{suffix}"), &SCHOLAR_BASE)];
            assert_eq!(v("min"), v("mean"));
            assert_eq!(v("mean"), v("max"));
        }
        assert_eq!(r.values.len(), 42);
    }

    #[test]
    fn shared_publication_flags_owner() {
        let c = Corpus::new(
            2016,
            vec![info("a"), info("b")],
            vec![
                Publication {
                    scholar_ids: vec!["a".into(), "b".into()],
                    ..flat("shared", "a", 2000, 1)
                },
                flat("big", "b", 2000, 9),
            ],
        )
        .unwrap();
        let r = publication_features(&c, &BenchmarkSpec::all(), "shared", 5).unwrap();
        assert!(r.ambiguous_owner);
        // b holds more citations, so b supplies author features
        assert_eq!(r.values[col("aut_cit_cumulative", &PUBLICATION_BASE)], 50.0);
    }

    #[test]
    fn tasks_validate() {
        assert!(Task::new(TargetKind::Scholar, 5, 5).is_err());
        assert!(Task::new(TargetKind::Scholar, 2, 5).is_err());
        assert!(Task::new(TargetKind::Scholar, 5, 31).is_err());
        assert!(Task::new(TargetKind::Scholar, 5, 6).is_ok());
    }

    #[test]
    fn matrix_targets_are_deltas() {
        let c = Corpus::new(
            2016,
            vec![info("a"), info("b"), info("c")],
            vec![
                flat("p1", "a", 1980, 2),
                flat("p2", "b", 1982, 1),
                flat("p3", "c", 1985, 4),
                flat("p4", "a", 1990, 3),
            ],
        )
        .unwrap();
        let task = Task::new(TargetKind::Publication, 5, 10).unwrap();
        let m = assemble(&c, &BenchmarkSpec::all(), task).unwrap();
        assert_eq!(m.len(), 3);
        let p10 = publication_percentile(&c, &BenchmarkSpec::all(), 10).unwrap();
        for (i, id) in m.entity_ids.iter().enumerate() {
            assert_eq!(m.level_target()[i], m.autoregressive()[i] + m.target[i]);
            assert!((m.level_target()[i] - p10[id]).abs() < 1e-15);
        }
        let s = assemble(&c, &BenchmarkSpec::all(), Task::new(TargetKind::Scholar, 5, 10).unwrap()).unwrap();
        assert_eq!(s.columns.len(), 42);
        assert_eq!(s.len(), 3);
        assert_eq!(s.target_name(), "delta_scholar_percentile");
        assert_eq!(
            assemble(&c, &BenchmarkSpec::all(), Task::new(TargetKind::Scholar, 5, 10).unwrap()).unwrap(),
            s
        );
    }
}
