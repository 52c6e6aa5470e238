//! Rayon drivers for the parallelizable stages. Each returns exactly what the
//! sequential core function returns, whatever the worker count.

use impact_rank_core::corpus::{BenchmarkSpec, Corpus};
use impact_rank_core::features::{FeatureContext, FeatureMatrix, FeatureRow, TargetKind, Task};
use impact_rank_core::metrics::MetricSpec;
use impact_rank_core::percentile::{series_from_rankings, Benchmark, PercentileSeries, Ranked};
use impact_rank_core::predict::{self, FitResult, ModelKind, ModelSpec};
use impact_rank_core::synth::{self, SynthConfig};
use impact_rank_core::Age;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A pool with `jobs` workers; `None` uses every available core.
pub fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(Error::Format("--jobs must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Format(e.to_string()))
}

pub fn synth(config: &SynthConfig) -> Result<Corpus> {
    config.validate()?;
    let parts = (0..config.n_scholars)
        .into_par_iter()
        .map(|i| synth::generate_scholar(config, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut scholars = Vec::with_capacity(parts.len());
    let mut pubs = Vec::new();
    for (s, p) in parts {
        scholars.push(s);
        pubs.extend(p);
    }
    Ok(Corpus::new(config.end_year, scholars, pubs)?)
}

fn keep_eligible(r: impact_rank_core::Result<Ranked>) -> Result<Option<Ranked>> {
    match r {
        Ok(r) => Ok(Some(r)),
        Err(impact_rank_core::Error::Eligibility(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Rankings at each age of `ages` that has at least one eligible entity.
pub fn publication_rankings(b: &Benchmark, ages: &[Age]) -> Result<Vec<(Age, Ranked)>> {
    let r = ages
        .par_iter()
        .map(|&t| Ok(keep_eligible(b.pub_percentiles(t))?.map(|r| (t, r))))
        .collect::<Result<Vec<_>>>()?;
    Ok(r.into_iter().flatten().collect())
}

pub fn scholar_rankings(b: &Benchmark, metric: &MetricSpec, ages: &[Age]) -> Result<Vec<(Age, Ranked)>> {
    let summaries = b.summaries_for(metric)?;
    let r = ages
        .par_iter()
        .map(|&t| Ok(keep_eligible(b.scholar_percentiles(metric, t, summaries.as_deref()))?.map(|r| (t, r))))
        .collect::<Result<Vec<_>>>()?;
    Ok(r.into_iter().flatten().collect())
}

pub fn publication_series(b: &Benchmark, ages: &[Age]) -> Result<Vec<PercentileSeries>> {
    let rankings = publication_rankings(b, ages)?;
    let ids: Vec<&str> = b.corpus().publications().iter().map(|p| p.pub_id.as_str()).collect();
    Ok(series_from_rankings(&ids, &rankings, b.spec(), MetricSpec::publication_citations()))
}

pub fn scholar_series(b: &Benchmark, metric: &MetricSpec, ages: &[Age]) -> Result<Vec<PercentileSeries>> {
    let rankings = scholar_rankings(b, metric, ages)?;
    let ids: Vec<&str> = b.corpus().scholars().iter().map(|s| s.scholar_id.as_str()).collect();
    Ok(series_from_rankings(&ids, &rankings, b.spec(), *metric))
}

fn rows(ctx: &FeatureContext, kind: TargetKind, entities: &[usize], t1: Age) -> Result<Vec<FeatureRow>> {
    Ok(entities
        .par_iter()
        .map(|&i| ctx.row(kind, i, t1))
        .collect::<Result<Vec<_>, _>>()?)
}

pub fn feature_matrix(ctx: &FeatureContext, task: Task) -> Result<FeatureMatrix> {
    let entities = ctx.entities(task.kind);
    let rows = rows(ctx, task.kind, &entities, task.t1)?;
    Ok(ctx.matrix_from_rows(task, &entities, rows)?)
}

/// Parallel counterpart of [`predict::run_grid`], in the same result order.
pub fn run_grid(
    corpus: &Corpus,
    bench: &BenchmarkSpec,
    kind: TargetKind,
    models: &[ModelKind],
    seed: u64,
) -> Result<Vec<FitResult>> {
    let ctx = FeatureContext::from_corpus(corpus, bench)?;
    run_tasks(&ctx, kind, &predict::grid_tasks(kind), models, seed)
}

/// Fits `models` on every task, sharing one entity split per target kind.
pub fn run_tasks(
    ctx: &FeatureContext,
    kind: TargetKind,
    tasks: &[Task],
    models: &[ModelKind],
    seed: u64,
) -> Result<Vec<FitResult>> {
    let split = predict::task_split(ctx, kind, seed)?;
    let entities = ctx.entities(kind);
    let mut t1s: Vec<Age> = tasks.iter().map(|t| t.t1).collect();
    t1s.sort_unstable();
    t1s.dedup();
    let by_t1: Vec<(Age, Vec<FeatureRow>)> = t1s
        .par_iter()
        .map(|&t1| Ok((t1, rows(ctx, kind, &entities, t1)?)))
        .collect::<Result<Vec<_>>>()?;
    let matrices = tasks
        .par_iter()
        .map(|&task| {
            let rows = &by_t1.iter().find(|(t, _)| *t == task.t1).expect("rows for t1").1;
            Ok(ctx.matrix_from_rows(task, &entities, rows.clone())?)
        })
        .collect::<Result<Vec<FeatureMatrix>>>()?;
    let jobs: Vec<(usize, ModelKind)> = (0..tasks.len()).flat_map(|i| models.iter().map(move |&m| (i, m))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(i, m)| predict::run_task(&matrices[i], &split, &ModelSpec::new(m), seed))
        .collect::<Result<Vec<_>, _>>()?)
}
