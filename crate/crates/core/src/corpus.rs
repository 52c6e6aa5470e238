//! Scholars, publications and their citation histories, plus benchmark slicing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::Age;

/// Keywords of the biology field benchmark.
pub const BIOLOGY_KEYWORDS: [&str; 4] = ["biology", "genetic", "neuroscience", "cell"];

/// Yearly citation counts keyed by calendar year. Absent years are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationHistory {
    counts: BTreeMap<i32, u64>,
}

impl CitationHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the count for `year`. Zero counts are not stored.
    pub fn set(&mut self, year: i32, count: u64) {
        if count == 0 {
            self.counts.remove(&year);
        } else {
            self.counts.insert(year, count);
        }
    }

    pub fn get(&self, year: i32) -> u64 {
        self.counts.get(&year).copied().unwrap_or(0)
    }

    /// Citations received in calendar years `from..=to`.
    pub fn in_years(&self, from: i32, to: i32) -> u64 {
        if from > to {
            return 0;
        }
        self.counts.range(from..=to).map(|(_, c)| *c).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn first_year(&self) -> Option<i32> {
        self.counts.keys().next().copied()
    }

    pub fn last_year(&self) -> Option<i32> {
        self.counts.keys().next_back().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, u64)> + '_ {
        self.counts.iter().map(|(y, c)| (*y, *c))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

impl FromIterator<(i32, u64)> for CitationHistory {
    fn from_iter<I: IntoIterator<Item = (i32, u64)>>(iter: I) -> Self {
        let mut h = Self::new();
        for (y, c) in iter {
            h.set(y, c);
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Publication {
    pub pub_id: String,
    /// Owning scholars, sorted and de-duplicated by the corpus.
    pub scholar_ids: Vec<String>,
    pub pub_year: i32,
    pub history: CitationHistory,
}

impl Publication {
    pub fn new(pub_id: impl Into<String>, scholar_id: impl Into<String>, pub_year: i32) -> Self {
        Self {
            pub_id: pub_id.into(),
            scholar_ids: alloc::vec![scholar_id.into()],
            pub_year,
            history: CitationHistory::new(),
        }
    }

    pub fn with_history(mut self, history: CitationHistory) -> Self {
        self.history = history;
        self
    }

    /// Calendar year of age `t`.
    pub fn year_at_age(&self, t: Age) -> i32 {
        self.pub_year + t as i32 - 1
    }

    /// Citations over the age window `[pub_year, pub_year + t - 1]`, without
    /// any eligibility check.
    pub fn cumulative_at_age(&self, t: Age) -> u64 {
        self.history.in_years(self.pub_year, self.year_at_age(t))
    }

    /// Citations received in the single calendar year of age `t`.
    pub fn yearly_at_age(&self, t: Age) -> u64 {
        self.history.get(self.year_at_age(t))
    }
}

/// Scholar attributes as supplied by a data source; the career start is
/// derived from the publications when a [`Corpus`] is built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScholarInfo {
    pub scholar_id: String,
    pub interests: Vec<String>,
    pub tenured: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scholar {
    pub scholar_id: String,
    /// Calendar year of the first publication.
    pub career_start: i32,
    /// Lowercase research-interest keywords.
    pub interests: Vec<String>,
    pub tenured: bool,
}

impl Scholar {
    /// Calendar year of scholar age `t`.
    pub fn year_at_age(&self, t: Age) -> i32 {
        self.career_start + t as i32 - 1
    }

    fn matches_any(&self, keywords: &[String]) -> bool {
        keywords.iter().any(|k| {
            let k = k.to_lowercase();
            self.interests.iter().any(|i| i.to_lowercase().contains(k.as_str()))
        })
    }
}

/// A validated, immutable collection of scholars and publications.
///
/// Scholars and publications are stored sorted by id; the index accessors
/// (`pubs_of`, `owners_of`) refer to positions in those sorted vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    end_year: i32,
    scholars: Vec<Scholar>,
    publications: Vec<Publication>,
    scholar_pubs: Vec<Vec<usize>>,
    pub_owners: Vec<Vec<usize>>,
}

impl Corpus {
    pub fn empty(end_year: i32) -> Self {
        Self {
            end_year,
            scholars: Vec::new(),
            publications: Vec::new(),
            scholar_pubs: Vec::new(),
            pub_owners: Vec::new(),
        }
    }

    /// Builds a corpus from raw records, deriving each career start from the
    /// earliest owned publication.
    pub fn new(end_year: i32, scholars: Vec<ScholarInfo>, publications: Vec<Publication>) -> Result<Self> {
        let mut first_year: BTreeMap<&str, i32> = BTreeMap::new();
        for p in &publications {
            for s in &p.scholar_ids {
                first_year
                    .entry(s.as_str())
                    .and_modify(|y| *y = (*y).min(p.pub_year))
                    .or_insert(p.pub_year);
            }
        }
        let mut built = Vec::with_capacity(scholars.len());
        for info in scholars {
            let career_start = *first_year
                .get(info.scholar_id.as_str())
                .ok_or_else(|| validation!("scholar {} owns no publications", info.scholar_id))?;
            built.push(Scholar {
                scholar_id: info.scholar_id,
                career_start,
                interests: info.interests,
                tenured: info.tenured,
            });
        }
        Self::assemble(end_year, built, publications, true)
    }

    /// Builds a corpus whose scholars already carry a career start. The start
    /// must not be later than any owned publication; sub-corpora restricted to
    /// one publication year keep the career start of the full corpus.
    pub fn from_parts(end_year: i32, scholars: Vec<Scholar>, publications: Vec<Publication>) -> Result<Self> {
        Self::assemble(end_year, scholars, publications, false)
    }

    fn assemble(
        end_year: i32,
        mut scholars: Vec<Scholar>,
        mut publications: Vec<Publication>,
        exact_career: bool,
    ) -> Result<Self> {
        for s in &mut scholars {
            for i in &mut s.interests {
                *i = i.to_lowercase();
            }
        }
        scholars.sort_by(|a, b| a.scholar_id.cmp(&b.scholar_id));
        if let Some(w) = scholars.windows(2).find(|w| w[0].scholar_id == w[1].scholar_id) {
            return Err(validation!("duplicate scholar_id {}", w[0].scholar_id));
        }
        publications.sort_by(|a, b| a.pub_id.cmp(&b.pub_id));
        if let Some(w) = publications.windows(2).find(|w| w[0].pub_id == w[1].pub_id) {
            return Err(validation!("duplicate pub_id {}", w[0].pub_id));
        }

        let mut scholar_pubs = alloc::vec![Vec::new(); scholars.len()];
        let mut pub_owners = Vec::with_capacity(publications.len());
        for (pi, p) in publications.iter_mut().enumerate() {
            p.scholar_ids.sort();
            p.scholar_ids.dedup();
            if p.scholar_ids.is_empty() {
                return Err(validation!("publication {} has no owning scholar", p.pub_id));
            }
            if p.pub_year > end_year {
                return Err(validation!(
                    "publication {} year {} is after the end year {}",
                    p.pub_id,
                    p.pub_year,
                    end_year
                ));
            }
            if let Some(y) = p.history.first_year() {
                if y < p.pub_year {
                    return Err(validation!(
                        "publication {} has citations in {} before its publication year {}",
                        p.pub_id,
                        y,
                        p.pub_year
                    ));
                }
            }
            if let Some(y) = p.history.last_year() {
                if y > end_year {
                    return Err(validation!(
                        "publication {} has citations in {} after the end year {}",
                        p.pub_id,
                        y,
                        end_year
                    ));
                }
            }
            let mut owners = Vec::with_capacity(p.scholar_ids.len());
            for sid in &p.scholar_ids {
                let si = scholars
                    .binary_search_by(|s| s.scholar_id.as_str().cmp(sid))
                    .map_err(|_| validation!("publication {} references unknown scholar {}", p.pub_id, sid))?;
                scholar_pubs[si].push(pi);
                owners.push(si);
            }
            pub_owners.push(owners);
        }
        for (s, pubs) in scholars.iter().zip(&scholar_pubs) {
            let Some(first) = pubs.iter().map(|&i| publications[i].pub_year).min() else {
                return Err(validation!("scholar {} owns no publications", s.scholar_id));
            };
            if (exact_career && s.career_start != first) || s.career_start > first {
                return Err(validation!(
                    "scholar {} career start {} inconsistent with first publication year {}",
                    s.scholar_id,
                    s.career_start,
                    first
                ));
            }
        }
        Ok(Self {
            end_year,
            scholars,
            publications,
            scholar_pubs,
            pub_owners,
        })
    }

    pub fn end_year(&self) -> i32 {
        self.end_year
    }

    pub fn scholars(&self) -> &[Scholar] {
        &self.scholars
    }

    pub fn publications(&self) -> &[Publication] {
        &self.publications
    }

    pub fn scholar_index(&self, scholar_id: &str) -> Option<usize> {
        self.scholars
            .binary_search_by(|s| s.scholar_id.as_str().cmp(scholar_id))
            .ok()
    }

    pub fn publication_index(&self, pub_id: &str) -> Option<usize> {
        self.publications
            .binary_search_by(|p| p.pub_id.as_str().cmp(pub_id))
            .ok()
    }

    pub fn scholar(&self, scholar_id: &str) -> Option<&Scholar> {
        self.scholar_index(scholar_id).map(|i| &self.scholars[i])
    }

    pub fn publication(&self, pub_id: &str) -> Option<&Publication> {
        self.publication_index(pub_id).map(|i| &self.publications[i])
    }

    /// Publication indices owned by scholar `si`, in pub_id order.
    pub fn pubs_of(&self, si: usize) -> &[usize] {
        &self.scholar_pubs[si]
    }

    /// Scholar indices owning publication `pi`.
    pub fn owners_of(&self, pi: usize) -> &[usize] {
        &self.pub_owners[pi]
    }

    /// Number of fully observed years of a publication (the publication year counts).
    pub fn pub_observed_years(&self, pi: usize) -> Age {
        (self.end_year - self.publications[pi].pub_year + 1) as Age
    }

    /// Number of fully observed years of a scholar's career.
    pub fn scholar_observed_years(&self, si: usize) -> Age {
        (self.end_year - self.scholars[si].career_start + 1).max(0) as Age
    }

    pub fn is_empty(&self) -> bool {
        self.scholars.is_empty() && self.publications.is_empty()
    }

    pub fn into_parts(self) -> (i32, Vec<Scholar>, Vec<Publication>) {
        (self.end_year, self.scholars, self.publications)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchmarkKind {
    All,
    Tenured,
    /// Scholars whose interests contain any keyword (case-insensitive substring).
    FieldKeywords(Vec<String>),
    CustomIds(BTreeSet<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cohort {
    PubYear(i32),
    CareerStart(i32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub kind: BenchmarkKind,
    pub cohort: Option<Cohort>,
}

impl BenchmarkSpec {
    pub fn all() -> Self {
        Self {
            kind: BenchmarkKind::All,
            cohort: None,
        }
    }

    pub fn tenured() -> Self {
        Self {
            kind: BenchmarkKind::Tenured,
            cohort: None,
        }
    }

    pub fn field<S: ToString>(keywords: &[S]) -> Self {
        Self {
            kind: BenchmarkKind::FieldKeywords(keywords.iter().map(|k| k.to_string()).collect()),
            cohort: None,
        }
    }

    pub fn biology() -> Self {
        Self::field(&BIOLOGY_KEYWORDS)
    }

    pub fn custom<S: ToString>(ids: &[S]) -> Self {
        Self {
            kind: BenchmarkKind::CustomIds(ids.iter().map(|k| k.to_string()).collect()),
            cohort: None,
        }
    }

    pub fn with_cohort(mut self, cohort: Cohort) -> Self {
        self.cohort = Some(cohort);
        self
    }

    fn keeps(&self, s: &Scholar) -> bool {
        let kind = match &self.kind {
            BenchmarkKind::All => true,
            BenchmarkKind::Tenured => s.tenured,
            BenchmarkKind::FieldKeywords(k) => s.matches_any(k),
            BenchmarkKind::CustomIds(ids) => ids.contains(&s.scholar_id),
        };
        kind && !matches!(self.cohort, Some(Cohort::CareerStart(y)) if s.career_start != y)
    }
}

/// Restricts a corpus to a benchmark.
///
/// Kept scholars retain all their publications (restricted to one year under a
/// `PubYear` cohort); publications shared with dropped scholars stay, owned by
/// the kept scholars only. Scholars left without publications are dropped.
pub fn filter_benchmark(corpus: &Corpus, spec: &BenchmarkSpec) -> Result<Corpus> {
    if let BenchmarkKind::CustomIds(ids) = &spec.kind {
        if let Some(missing) = ids.iter().find(|id| corpus.scholar_index(id).is_none()) {
            return Err(validation!("benchmark references unknown scholar {}", missing));
        }
    }
    if spec.kind == BenchmarkKind::All && spec.cohort.is_none() {
        return Ok(corpus.clone());
    }
    let kept: Vec<bool> = corpus.scholars.iter().map(|s| spec.keeps(s)).collect();
    let mut owns = alloc::vec![false; corpus.scholars.len()];
    let mut publications = Vec::new();
    for (pi, p) in corpus.publications.iter().enumerate() {
        if matches!(spec.cohort, Some(Cohort::PubYear(y)) if p.pub_year != y) {
            continue;
        }
        let owners: Vec<usize> = corpus.pub_owners[pi].iter().copied().filter(|&si| kept[si]).collect();
        if owners.is_empty() {
            continue;
        }
        for &si in &owners {
            owns[si] = true;
        }
        publications.push(Publication {
            scholar_ids: owners.iter().map(|&si| corpus.scholars[si].scholar_id.clone()).collect(),
            ..p.clone()
        });
    }
    let scholars = corpus
        .scholars
        .iter()
        .zip(&owns)
        .filter(|(_, &o)| o)
        .map(|(s, _)| s.clone())
        .collect();
    Corpus::from_parts(corpus.end_year, scholars, publications)
}

/// Indices of publications with at least `t` fully observed years.
pub fn eligible_pub_indices(corpus: &Corpus, t: Age) -> Result<Vec<usize>> {
    if t < 1 {
        return Err(domain!("age must be at least 1, got {}", t));
    }
    Ok((0..corpus.publications.len())
        .filter(|&pi| corpus.pub_observed_years(pi) >= t)
        .collect())
}

/// Ids of publications with at least `t` fully observed years.
pub fn eligible_publications(corpus: &Corpus, t: Age) -> Result<BTreeSet<String>> {
    Ok(eligible_pub_indices(corpus, t)?
        .into_iter()
        .map(|pi| corpus.publications[pi].pub_id.clone())
        .collect())
}
