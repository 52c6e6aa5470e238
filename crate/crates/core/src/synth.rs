//! Synthetic corpora: a seeded citation process and the artificial scholars A, B and C.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{CitationHistory, Corpus, Publication, Scholar, ScholarInfo};
use crate::error::{domain, eligibility, Result};
use crate::{math, Age};

/// Interest keywords drawn for synthetic scholars.
pub const VOCABULARY: [&str; 10] = [
    "biology",
    "cell signalling",
    "genetics",
    "neuroscience",
    "physics",
    "chemistry",
    "computer science",
    "economics",
    "mathematics",
    "sociology",
];

/// Expected yearly citations at age `a` are `L (1 - rho) rho^(a - 1) exp(w_a)`,
/// where `L ~ LogNormal(mu + q, sigma)` for a scholar of quality `q` and `w` is
/// a Gaussian random walk started at 0 with step `drift_sd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CitationProcess {
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub drift_sd: f64,
}

impl Default for CitationProcess {
    fn default() -> Self {
        Self {
            mu: 3.0,
            sigma: 1.0,
            rho: 0.85,
            drift_sd: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_scholars: usize,
    /// Years in which a scholar publishes.
    pub career_span: u32,
    /// Poisson rate of publications per career year.
    pub pubs_per_year: f64,
    pub citation_process: CitationProcess,
    pub seed: u64,
    pub end_year: i32,
    /// Inclusive range of nominal career starts; defaults to
    /// `[end - 2 span + 2, end - span + 1]`, so every career is observed for
    /// at least `span` years.
    pub cohort_range: Option<(i32, i32)>,
    /// Standard deviation of the per-scholar log-scale quality.
    pub quality_sd: f64,
    pub tenured_share: f64,
    /// Yearly growth of expected citations by publication year; 0 keeps the
    /// process time-homogeneous.
    pub inflation: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_scholars: 2000,
            career_span: 30,
            pubs_per_year: 2.0,
            citation_process: CitationProcess::default(),
            seed: 7,
            end_year: 2016,
            cohort_range: None,
            quality_sd: 0.5,
            tenured_share: 0.2,
            inflation: 0.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let p = &self.citation_process;
        if self.career_span < 1 {
            return Err(domain!("career span must be at least one year"));
        }
        if !(self.pubs_per_year > 0.0 && self.pubs_per_year.is_finite()) {
            return Err(domain!("publication rate must be positive"));
        }
        if !(p.rho > 0.0 && p.rho < 1.0) {
            return Err(domain!("aging decay rho must lie in (0, 1), got {}", p.rho));
        }
        if !(p.sigma >= 0.0 && p.drift_sd >= 0.0 && self.quality_sd >= 0.0) || !p.mu.is_finite() {
            return Err(domain!("invalid citation process parameters"));
        }
        if !(0.0..=1.0).contains(&self.tenured_share) {
            return Err(domain!("tenured share must lie in [0, 1]"));
        }
        if !(self.inflation > -1.0 && self.inflation.is_finite()) {
            return Err(domain!("inflation must exceed -1"));
        }
        let (lo, hi) = self.cohorts();
        if lo > hi || hi > self.end_year {
            return Err(domain!("invalid cohort range {}..={}", lo, hi));
        }
        Ok(())
    }

    pub fn cohorts(&self) -> (i32, i32) {
        let span = self.career_span as i32;
        self.cohort_range
            .unwrap_or((self.end_year - 2 * span + 2, self.end_year - span + 1))
    }

    /// Year whose inflation factor is 1.
    fn base_year(&self) -> i32 {
        self.cohorts().0
    }
}

pub fn scholar_id(i: usize) -> String {
    format!("s{:06}", i)
}

/// Draws one scholar from its own stream, so scholars can be generated in any
/// order or in parallel.
pub fn generate_scholar(config: &SynthConfig, i: usize) -> Result<(ScholarInfo, Vec<Publication>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(i as u64);
    let p = config.citation_process;
    let (lo, hi) = config.cohorts();
    let start = rng.random_range(lo..=hi);
    let quality = if config.quality_sd > 0.0 {
        Normal::new(0.0, config.quality_sd).expect("valid sd").sample(&mut rng)
    } else {
        0.0
    };
    let tenured = rng.random_bool(config.tenured_share);
    let mut interests: Vec<String> = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let w = VOCABULARY[rng.random_range(0..VOCABULARY.len())];
        if !interests.iter().any(|x| x == w) {
            interests.push(w.into());
        }
    }
    let sid = scholar_id(i);
    let yearly = Poisson::new(config.pubs_per_year).expect("positive rate");
    let lifetime = LogNormal::new(p.mu + quality, p.sigma).expect("valid lognormal");
    let last = (start + config.career_span as i32 - 1).min(config.end_year);
    let mut years = Vec::new();
    for y in start..=last {
        let k = yearly.sample(&mut rng) as usize;
        years.extend(core::iter::repeat_n(y, k));
    }
    if years.is_empty() {
        years.push(start);
    }
    let mut pubs = Vec::with_capacity(years.len());
    for (j, &y) in years.iter().enumerate() {
        let factor = math::powi(1.0 + config.inflation, y - config.base_year());
        let total = lifetime.sample(&mut rng) * factor;
        let mut walk = 0.0;
        let mut history = CitationHistory::new();
        for a in 1..=(config.end_year - y + 1) as Age {
            if a > 1 && p.drift_sd > 0.0 {
                walk += p.drift_sd * sample_standard_normal(&mut rng);
            }
            let rate = total * (1.0 - p.rho) * math::powi(p.rho, a as i32 - 1) * math::exp(walk);
            history.set(y + a as i32 - 1, poisson_count(&mut rng, rate));
        }
        pubs.push(Publication::new(format!("{sid}-p{j:04}"), sid.clone(), y).with_history(history));
    }
    Ok((
        ScholarInfo {
            scholar_id: sid,
            interests,
            tenured,
        },
        pubs,
    ))
}

fn sample_standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rand_distr::StandardNormal.sample(rng)
}

fn poisson_count(rng: &mut ChaCha8Rng, rate: f64) -> u64 {
    if !(rate > 0.0) {
        return 0;
    }
    Poisson::new(rate.min(1e9)).expect("positive rate").sample(rng) as u64
}

/// Generates a full corpus; identical configs give identical corpora.
pub fn generate(config: &SynthConfig) -> Result<Corpus> {
    config.validate()?;
    let mut scholars = Vec::with_capacity(config.n_scholars);
    let mut pubs = Vec::new();
    for i in 0..config.n_scholars {
        let (s, p) = generate_scholar(config, i)?;
        scholars.push(s);
        pubs.extend(p);
    }
    Corpus::new(config.end_year, scholars, pubs)
}

pub const ARTIFICIAL_A: &str = "artificial-A";
pub const ARTIFICIAL_B: &str = "artificial-B";
pub const ARTIFICIAL_C: &str = "artificial-C";

/// Cohort quantile of yearly publication counts used for scholar A.
pub const A_RATE_QUANTILE: f64 = 0.9;
/// Cohort quantile of five-year citations copied by each of A's papers.
pub const A_IMPACT_QUANTILE: f64 = 0.1;
pub const B_IMPACT_QUANTILE: f64 = 0.99;
pub const C_IMPACT_QUANTILE: f64 = 0.5;

/// Nearest-rank quantile of a sorted slice.
fn quantile_index(len: usize, q: f64) -> usize {
    ((math::ceil(q * len as f64) as usize).max(1) - 1).min(len - 1)
}

/// Adds scholars A, B and C to the cohort of careers starting in `cohort_year`.
///
/// A publishes every year at the cohort's 90th-percentile publication rate,
/// each paper copying the citation profile of the cohort's 10th-percentile
/// first-year paper (ranked by five-year citations). B and C each publish a
/// single paper in `cohort_year` copying the 99th-percentile and median
/// profiles. Every copied profile gets at least one citation at age 1.
pub fn inject_artificial_scholars(corpus: &Corpus, cohort_year: i32) -> Result<Corpus> {
    let cohort: Vec<usize> = (0..corpus.scholars().len())
        .filter(|&si| corpus.scholars()[si].career_start == cohort_year)
        .collect();
    if cohort.is_empty() {
        return Err(eligibility!("no careers start in {}", cohort_year));
    }
    for id in [ARTIFICIAL_A, ARTIFICIAL_B, ARTIFICIAL_C] {
        if corpus.scholar_index(id).is_some() {
            return Err(domain!("corpus already contains {}", id));
        }
    }
    let end = corpus.end_year();
    let observed = (end - cohort_year + 1) as f64;
    let mut rates: Vec<f64> = cohort
        .iter()
        .map(|&si| corpus.pubs_of(si).len() as f64 / observed)
        .collect();
    rates.sort_by(f64::total_cmp);
    let a_per_year = math::ceil(rates[quantile_index(rates.len(), A_RATE_QUANTILE)]).max(1.0) as usize;

    let mut templates: Vec<&Publication> = cohort
        .iter()
        .flat_map(|&si| corpus.pubs_of(si).iter().map(|&pi| &corpus.publications()[pi]))
        .filter(|p| p.pub_year == cohort_year)
        .collect();
    templates.sort_by(|a, b| a.cumulative_at_age(5).cmp(&b.cumulative_at_age(5)).then(a.pub_id.cmp(&b.pub_id)));
    let profile = |q: f64| -> Vec<u64> {
        let t = templates[quantile_index(templates.len(), q)];
        let mut v: Vec<u64> = (1..=observed as Age).map(|a| t.yearly_at_age(a)).collect();
        v[0] = v[0].max(1);
        v
    };
    let copy = |id: String, owner: &str, year: i32, prof: &[u64]| {
        let history = prof
            .iter()
            .enumerate()
            .map(|(k, &c)| (year + k as i32, c))
            .filter(|(y, _)| *y <= end)
            .collect();
        Publication::new(id, owner, year).with_history(history)
    };

    let (_, mut scholars, mut pubs) = corpus.clone().into_parts();
    let a_prof = profile(A_IMPACT_QUANTILE);
    let mut j = 0;
    for y in cohort_year..=end {
        for _ in 0..a_per_year {
            pubs.push(copy(format!("{ARTIFICIAL_A}-p{j:04}"), ARTIFICIAL_A, y, &a_prof));
            j += 1;
        }
    }
    pubs.push(copy(format!("{ARTIFICIAL_B}-p0000"), ARTIFICIAL_B, cohort_year, &profile(B_IMPACT_QUANTILE)));
    pubs.push(copy(format!("{ARTIFICIAL_C}-p0000"), ARTIFICIAL_C, cohort_year, &profile(C_IMPACT_QUANTILE)));
    for id in [ARTIFICIAL_A, ARTIFICIAL_B, ARTIFICIAL_C] {
        scholars.push(Scholar {
            scholar_id: id.into(),
            career_start: cohort_year,
            interests: vec!["biology".into()],
            tenured: false,
        });
    }
    Corpus::from_parts(end, scholars, pubs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::h_index;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_scholars: 60,
            career_span: 12,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn zero_scholars_give_empty_corpus() {
        let c = generate(&SynthConfig {
            n_scholars: 0,
            ..SynthConfig::default()
        })
        .unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        assert_eq!(generate(&small(1)).unwrap(), generate(&small(1)).unwrap());
        assert_ne!(generate(&small(1)).unwrap(), generate(&small(2)).unwrap());
    }

    #[test]
    fn scholars_are_independent_streams() {
        let cfg = small(4);
        let (a, _) = generate_scholar(&cfg, 5).unwrap();
        let c = generate(&cfg).unwrap();
        assert_eq!(c.scholar(&a.scholar_id).unwrap().interests, a.interests);
    }

    #[test]
    fn invalid_configs() {
        let mut c = small(1);
        c.citation_process.rho = 1.0;
        assert!(c.validate().is_err());
        let mut c = small(1);
        c.pubs_per_year = 0.0;
        assert!(c.validate().is_err());
        let mut c = small(1);
        c.cohort_range = Some((2020, 2030));
        assert!(c.validate().is_err());
    }

    #[test]
    fn publication_total_near_poisson_mean() {
        let cfg = SynthConfig {
            n_scholars: 300,
            ..SynthConfig::default()
        };
        let c = generate(&cfg).unwrap();
        let mean = 300.0 * 30.0 * 2.0;
        let sd = libm::sqrt(mean);
        assert!((c.publications().len() as f64 - mean).abs() < 3.0 * sd + 300.0 * 0.01);
    }

    #[test]
    fn injection_shape() {
        let cfg = small(9);
        let c = generate(&cfg).unwrap();
        let year = c.scholars()[0].career_start;
        let injected = inject_artificial_scholars(&c, year).unwrap();
        assert_eq!(injected.scholars().len(), c.scholars().len() + 3);
        let b = injected.scholar_index(ARTIFICIAL_B).unwrap();
        assert_eq!(injected.pubs_of(b).len(), 1);
        let bp = &injected.publications()[injected.pubs_of(b)[0]];
        assert!(bp.history.get(year) >= 1);
        let a = injected.scholar_index(ARTIFICIAL_A).unwrap();
        assert!(injected.pubs_of(a).len() >= (cfg.end_year - year + 1) as usize);
        assert!(inject_artificial_scholars(&injected, year).is_err());
        assert!(matches!(inject_artificial_scholars(&c, 1800), Err(crate::Error::Eligibility(_))));
        assert_eq!(h_index(&[bp.history.get(year)]), 1);
    }
}
