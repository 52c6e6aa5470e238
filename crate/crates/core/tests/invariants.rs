use std::collections::BTreeMap;

use impact_rank_core::corpus::{
    eligible_publications, filter_benchmark, BenchmarkSpec, CitationHistory, Cohort, Corpus, Publication, ScholarInfo,
};
use impact_rank_core::features::FeatureContext;
use impact_rank_core::metrics::MetricSpec;
use impact_rank_core::percentile::{publication_percentile, scholar_percentile};
use impact_rank_core::stationarity::{adf_test, first_difference};
use impact_rank_core::synth::{self, SynthConfig};
use impact_rank_core::MAX_AGE;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_config(n: usize, seed: u64) -> SynthConfig {
    SynthConfig {
        n_scholars: n,
        seed,
        pubs_per_year: 1.0,
        ..SynthConfig::default()
    }
}

fn arb_corpus() -> impl Strategy<Value = Corpus> {
    let scholar = (any::<bool>(), prop::sample::subsequence(vec!["Cell Biology", "physics", "genetics", "math"], 0..3));
    (prop::collection::vec(scholar, 1..8), prop::collection::vec((0usize..8, 1990i32..2016, 0u64..20), 1..40))
        .prop_map(|(scholars, pubs)| {
            let n = scholars.len();
            let infos: Vec<ScholarInfo> = scholars
                .into_iter()
                .enumerate()
                .map(|(i, (tenured, interests))| ScholarInfo {
                    scholar_id: format!("s{i}"),
                    interests: interests.into_iter().map(String::from).collect(),
                    tenured,
                })
                .collect();
            let mut out: Vec<Publication> = (0..n)
                .map(|i| Publication::new(format!("seed{i}"), format!("s{i}"), 2000))
                .collect();
            for (j, (owner, year, c)) in pubs.into_iter().enumerate() {
                let h: CitationHistory = (year..=2016).map(|y| (y, c * (y - year + 1) as u64 % 7)).collect();
                out.push(Publication::new(format!("p{j}"), format!("s{}", owner % n), year).with_history(h));
            }
            Corpus::new(2016, infos, out).expect("valid corpus")
        })
}

proptest! {
    #[test]
    fn filter_identity_and_idempotence(c in arb_corpus(), year in 1995i32..2010) {
        prop_assert_eq!(&filter_benchmark(&c, &BenchmarkSpec::all()).unwrap(), &c);
        let specs = [
            BenchmarkSpec::tenured(),
            BenchmarkSpec::biology(),
            BenchmarkSpec::field(&["PHYS"]),
            BenchmarkSpec::custom(&["s0"]),
            BenchmarkSpec::all().with_cohort(Cohort::PubYear(year)),
            BenchmarkSpec::all().with_cohort(Cohort::CareerStart(2000)),
        ];
        for spec in specs {
            let once = filter_benchmark(&c, &spec).unwrap();
            prop_assert_eq!(&filter_benchmark(&once, &spec).unwrap(), &once);
        }
    }

    #[test]
    fn eligibility_shrinks_with_age(c in arb_corpus(), t1 in 1u32..30, dt in 0u32..10) {
        let early = eligible_publications(&c, t1).unwrap();
        let late = eligible_publications(&c, t1 + dt).unwrap();
        prop_assert!(late.is_subset(&early));
    }
}

#[test]
fn synthetic_percentiles_average_one_half() {
    let c = synth::generate(&small_config(300, 11)).unwrap();
    let all = BenchmarkSpec::all();
    for t in 1..=MAX_AGE {
        let p = publication_percentile(&c, &all, t).unwrap();
        let mean = p.values().sum::<f64>() / p.len() as f64;
        assert!((mean - 0.5).abs() < 1e-12, "publications at age {t}: {mean}");
        for metric in [MetricSpec::p5_sum(), MetricSpec::h_index()] {
            let s = scholar_percentile(&c, &all, &metric, t).unwrap();
            let mean = s.values().sum::<f64>() / s.len() as f64;
            assert!((mean - 0.5).abs() < 1e-12, "{metric:?} at age {t}: {mean}");
        }
    }
}

#[test]
fn injection_displaces_other_scholars_by_at_most_three_slots() {
    for seed in 0..5 {
        let mut config = small_config(25, seed);
        config.cohort_range = Some((1987, 1990));
        let c = synth::generate(&config).unwrap();
        let injected = synth::inject_artificial_scholars(&c, 1988).unwrap();
        let all = BenchmarkSpec::all();
        for metric in [MetricSpec::scholar_citations(), MetricSpec::h_index()] {
            for t in [1, 5, 10, 20, 29] {
                let before = scholar_percentile(&c, &all, &metric, t).unwrap();
                let after = scholar_percentile(&injected, &all, &metric, t).unwrap();
                let bound = 3.0 / (before.len() as f64 + 3.0) + 1e-12;
                for (id, p) in &before {
                    let shift = (after[id] - p).abs();
                    assert!(shift <= bound, "{id} moved {shift} > {bound} ({metric:?}, t={t})");
                }
            }
        }
    }
}

fn perturbed(c: &Corpus, f: impl Fn(&mut Publication)) -> Corpus {
    let (end, scholars, mut pubs) = c.clone().into_parts();
    pubs.iter_mut().for_each(f);
    Corpus::from_parts(end, scholars, pubs).unwrap()
}

#[test]
fn publication_rows_ignore_own_later_citations() {
    let c = synth::generate(&small_config(60, 3)).unwrap();
    let all = BenchmarkSpec::all();
    let ctx = FeatureContext::from_corpus(&c, &all).unwrap();
    let pubs = ctx.full_history_pubs();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let pi = pubs[rng.random_range(0..pubs.len())];
        let t1 = rng.random_range(5..=25);
        let p = &c.publications()[pi];
        let cutoff = p.year_at_age(t1);
        let id = p.pub_id.clone();
        let changed = perturbed(&c, |q| {
            if q.pub_id == id {
                for y in cutoff + 1..=2016 {
                    q.history.set(y, q.history.get(y) * 3 + 17);
                }
            }
        });
        let other = FeatureContext::from_corpus(&changed, &all).unwrap();
        assert_eq!(ctx.publication_row(pi, t1).unwrap(), other.publication_row(pi, t1).unwrap());
    }
}

#[test]
fn scholar_rows_ignore_later_citations_outside_peer_percentiles() {
    let c = synth::generate(&small_config(60, 4)).unwrap();
    let all = BenchmarkSpec::all();
    let ctx = FeatureContext::from_corpus(&c, &all).unwrap();
    let scholars = ctx.full_history_scholars();
    let cols = impact_rank_core::features::TargetKind::Scholar.columns();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..6 {
        let si = scholars[rng.random_range(0..scholars.len())];
        let t1 = rng.random_range(3..=25);
        let s = &c.scholars()[si];
        let y = s.year_at_age(t1);
        let sid = s.scholar_id.clone();
        // Counts stop at y; the P5 sums see four more years; pub_rp_* rank
        // against same-age peers, some of which are observed after y.
        for (from, skip) in [(y + 1, &["pub_rp", "aut_rprp5"][..]), (y + 5, &["pub_rp"][..])] {
            let changed = perturbed(&c, |q| {
                if q.scholar_ids.contains(&sid) && q.pub_year <= y {
                    for year in from..=2016 {
                        q.history.set(year, q.history.get(year) + 40);
                    }
                }
            });
            let other = FeatureContext::from_corpus(&changed, &all).unwrap();
            let (a, b) = (ctx.scholar_row(si, t1).unwrap(), other.scholar_row(si, t1).unwrap());
            for (j, name) in cols.iter().enumerate() {
                if !skip.iter().any(|p| name.starts_with(p)) {
                    assert_eq!(a.values[j], b.values[j], "{name} at t1={t1}, perturbed from {from}");
                }
            }
        }
    }
}

#[test]
fn feature_deltas_are_two_age_differences() {
    let c = synth::generate(&small_config(40, 9)).unwrap();
    let ctx = FeatureContext::from_corpus(&c, &BenchmarkSpec::all()).unwrap();
    let kinds = [
        (impact_rank_core::features::TargetKind::Publication, ctx.full_history_pubs()),
        (impact_rank_core::features::TargetKind::Scholar, ctx.full_history_scholars()),
    ];
    for (kind, entities) in kinds {
        let cols = kind.columns();
        let base = cols.len() / 2;
        for &e in entities.iter().take(5) {
            for t1 in [5, 12, 30] {
                let now = ctx.row(kind, e, t1).unwrap().values;
                let then = ctx.row(kind, e, t1 - 2).unwrap().values;
                for j in 0..base {
                    assert_eq!(now[base + j], now[j] - then[j], "{} at t1={t1}", cols[base + j]);
                }
            }
        }
    }
}

#[test]
fn feature_matrices_are_deterministic() {
    let c = synth::generate(&small_config(50, 2)).unwrap();
    let task = impact_rank_core::features::Task::new(impact_rank_core::features::TargetKind::FutureWorks, 5, 12).unwrap();
    let a = impact_rank_core::features::assemble(&c, &BenchmarkSpec::all(), task).unwrap();
    let b = impact_rank_core::features::assemble(&c, &BenchmarkSpec::all(), task).unwrap();
    assert_eq!(a, b);
}

#[test]
fn differenced_random_walks_reject_when_levels_do_not() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let normal = rand_distr::StandardNormal;
    let mut checked = 0;
    for _ in 0..200 {
        let mut level = Vec::with_capacity(200);
        let mut x = 0.0;
        for _ in 0..200 {
            x += rng.sample::<f64, _>(normal);
            level.push(x);
        }
        if !adf_test(&level).unwrap().reject_null {
            checked += 1;
            assert!(adf_test(&first_difference(&level)).unwrap().reject_null, "{level:?}");
        }
    }
    assert!(checked > 150);
}

#[test]
fn percentile_maps_do_not_depend_on_record_order() {
    let c = synth::generate(&small_config(40, 8)).unwrap();
    let (end, mut scholars, mut pubs) = c.clone().into_parts();
    scholars.reverse();
    pubs.reverse();
    let shuffled = Corpus::from_parts(end, scholars, pubs).unwrap();
    let all = BenchmarkSpec::all();
    for t in [1, 5, 17] {
        let a: BTreeMap<_, _> = publication_percentile(&c, &all, t).unwrap();
        assert_eq!(a, publication_percentile(&shuffled, &all, t).unwrap());
    }
}
