use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::OnceLock;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use impact_rank::cache::PercentileCache;
use impact_rank::io::{self, Format};
use impact_rank::manifest::RunManifest;
use impact_rank::output::{self, *};
use impact_rank::parallel;
use impact_rank_core::analysis::{self, agreement, log_binned_average, ols_fit, pearson, trend_test};
use impact_rank_core::corpus::{BenchmarkSpec, Cohort, Corpus};
use impact_rank_core::features::{FeatureContext, TargetKind, Task};
use impact_rank_core::metrics::{Aggregator, MetricKind, MetricSpec, PubWindow, Target};
use impact_rank_core::percentile::{cohort_distribution, Benchmark, PercentileMap, PercentileSeries};
use impact_rank_core::predict::{self, ModelKind};
use impact_rank_core::seed::derive_seed;
use impact_rank_core::stationarity::{self, adf_test, first_difference, kpss_test, TestKind};
use impact_rank_core::synth::{self, CitationProcess, SynthConfig};
use impact_rank_core::Age;

/// Rank-percentile impact indicators for publications and scholars.
#[derive(Debug, Parser, Serialize)]
#[command(name = "impact-rank", version, arg_required_else_help = true)]
struct Cli {
    /// Root seed; each stochastic step derives its own sub-seed from it.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
enum Command {
    /// Validate a JSONL file or CSV-triple directory and write a corpus image.
    Ingest(IngestArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Percentiles of every entity at each age.
    Percentile(PercentileArgs),
    /// Correlation of percentiles between age pairs.
    Stability(StabilityArgs),
    /// Quartile-class agreement of S_c, S_h and S_P5, plus paired Wilcoxon tests.
    Agreement(AgreementArgs),
    /// ADF and KPSS tests per entity series and cohort trend tests.
    Stationarity(StationarityArgs),
    /// Feature matrix of one prediction task.
    Features(FeaturesArgs),
    /// Fit and evaluate prediction models on one task or the full grid.
    Predict(PredictArgs),
    /// Summarize a predict results file as JSON.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum InputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum OutputFormat {
    Bin,
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum TaskArg {
    #[value(alias = "publication")]
    Pub,
    Scholar,
    #[value(alias = "future-works")]
    Future,
}

impl From<TaskArg> for TargetKind {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Pub => TargetKind::Publication,
            TaskArg::Scholar => TargetKind::Scholar,
            TaskArg::Future => TargetKind::FutureWorks,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: InputFormat,
    #[arg(long, default_value_t = 2016)]
    end_year: i32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Defaults to `jsonl` for a `.jsonl` path, `csv` for a directory or a path without extension, else `bin`.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, alias = "n-scholars", default_value_t = 2000)]
    scholars: usize,
    #[arg(long, default_value_t = 2016)]
    end_year: i32,
    /// Years in which each scholar publishes.
    #[arg(long, alias = "career-span", default_value_t = 30)]
    span: u32,
    #[arg(long, default_value_t = 2.0)]
    pubs_per_year: f64,
    /// Earliest and latest career start, e.g. `1960,1987`.
    #[arg(long, value_parser = parse_pair)]
    cohorts: Option<(i32, i32)>,
    #[arg(long, default_value_t = 3.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Yearly decay of the citation rate.
    #[arg(long, default_value_t = 0.85)]
    rho: f64,
    /// Step size of the log-rate random walk.
    #[arg(long, default_value_t = 0.2)]
    drift_sd: f64,
    #[arg(long, default_value_t = 0.5)]
    quality_sd: f64,
    #[arg(long, default_value_t = 0.2)]
    tenured_share: f64,
    /// Yearly growth of citation rates across publication years.
    #[arg(long, default_value_t = 0.0)]
    inflation: f64,
    /// Add the artificial scholars A, B and C to the `--cohort-year` cohort.
    #[arg(long, requires = "cohort_year")]
    inject_abc: bool,
    #[arg(long, requires = "inject_abc")]
    cohort_year: Option<i32>,
}

#[derive(Debug, Args, Serialize)]
struct CorpusArgs {
    /// Corpus image written by `ingest` or `synth`.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// all | tenured | biology | field:KW1,KW2 | ids:FILE
    #[arg(long, default_value = "all")]
    benchmark: String,
    /// Restrict to a cohort: pub:YEAR or career:YEAR.
    #[arg(long)]
    cohort: Option<String>,
}

#[derive(Debug, Args, Serialize)]
struct PercentileArgs {
    #[command(flatten)]
    input: CorpusArgs,
    /// p<W>-sum | p<W>-median (W = 5, 10, .., max, mean, median) | citations |
    /// h-index | g-index | pub-citations
    #[arg(long, default_value = "p5-sum")]
    metric: String,
    /// Ages, e.g. `1..30` or `5,10,15`.
    #[arg(long, default_value = "1..30", value_parser = parse_ages)]
    ages: Ages,
    /// Future-works percentiles S_P5(t2|T1), with `--ages` as the t2 values.
    #[arg(long)]
    future_works: Option<Age>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct StabilityArgs {
    #[command(flatten)]
    input: CorpusArgs,
    /// Series from a `percentile` output instead of a corpus.
    #[arg(long, conflicts_with_all = ["corpus", "future_works", "binned"])]
    percentiles: Option<PathBuf>,
    #[arg(long, default_value = "p5-sum")]
    metric: String,
    #[arg(long, default_value = "5,10,15,20,25", value_parser = parse_ages)]
    t1: Ages,
    #[arg(long, default_value = "1..30", value_parser = parse_ages)]
    t2: Ages,
    /// Compare S_P5(t1) with the future-works S_P5(t2|t1) instead of S_P5(t2).
    #[arg(long)]
    future_works: bool,
    #[arg(long)]
    out: PathBuf,
    /// Log-binned averages of raw values (metric pc or sc).
    #[arg(long)]
    binned: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Per-entity points behind every cell.
    #[arg(long)]
    scatter: Option<PathBuf>,
    /// Correlations and fits as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct AgreementArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[arg(long, default_value = "1..30", value_parser = parse_ages)]
    ages: Ages,
    #[arg(long)]
    out: PathBuf,
    /// Paired Wilcoxon tests of the first metric against each other one.
    #[arg(long)]
    wilcoxon: Option<PathBuf>,
    #[arg(long, default_value = "p5-sum,p10-sum,pmax-sum,pmean-sum,pmedian-sum")]
    compare: String,
    /// Agreement fractions and Wilcoxon p-values as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct StationarityArgs {
    #[command(flatten)]
    input: CorpusArgs,
    /// Series from a `percentile` output instead of a corpus.
    #[arg(long, conflicts_with_all = ["corpus", "cohorts", "trend"])]
    percentiles: Option<PathBuf>,
    #[arg(long, default_value = "p5-sum")]
    metric: String,
    #[arg(long, default_value = "1..30", value_parser = parse_ages)]
    ages: Ages,
    /// Also test the differences value(t) - value(T) for ages t > T.
    #[arg(long)]
    difference_from: Option<Age>,
    #[arg(long)]
    out: PathBuf,
    /// Per-career-start medians of the metric at `--cohort-age`.
    #[arg(long)]
    cohorts: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    cohort_age: Age,
    /// Cohort trend regression as JSON.
    #[arg(long)]
    trend: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FeaturesArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[arg(long, alias = "target", value_enum)]
    task: TaskArg,
    #[arg(long)]
    t1: Age,
    #[arg(long)]
    t2: Age,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[arg(long, alias = "target", value_enum)]
    task: TaskArg,
    #[arg(long, default_value = "baseline,markov,ridge,lasso,enet")]
    models: String,
    /// Single task; without `--t1`/`--t2` the full 75-task grid runs.
    #[arg(long, requires = "t2")]
    t1: Option<Age>,
    #[arg(long, requires = "t1")]
    t2: Option<Age>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    coefficients: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

type Ages = Vec<Age>;

fn parse_ages(s: &str) -> Result<Ages, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = match part.split_once("..").or_else(|| part.split_once('-')) {
            Some((a, b)) => (a, b),
            None => (part, part),
        };
        let a: Age = a.trim().parse().map_err(|_| format!("bad age {a:?}"))?;
        let b: Age = b.trim().parse().map_err(|_| format!("bad age {b:?}"))?;
        if a < 1 || b < a {
            return Err(format!("bad age range {part:?}"));
        }
        out.extend(a..=b);
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err("empty age list".into());
    }
    Ok(out)
}

fn parse_pair(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let a = a.trim().parse().map_err(|_| format!("bad year {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("bad year {b:?}"))?;
    Ok((a, b))
}

/// Accepts the long names (`p5-sum`, `h-index`, ..) and the short ones
/// (`sp5`, `sh`, ..).
fn parse_metric(s: &str) -> anyhow::Result<MetricSpec> {
    let unknown = || anyhow!("unknown metric {s:?}");
    let m = match s {
        "pub-citations" | "pc" => MetricSpec::publication_citations(),
        "citations" | "sc" => MetricSpec::scholar_citations(),
        "h-index" | "sh" => MetricSpec::h_index(),
        "g-index" | "sg" => MetricSpec::g_index(),
        _ => {
            let (w, aggregator) = if let Some(rest) = s.strip_prefix("sp") {
                match rest.strip_suffix("-median") {
                    Some(w) => (w, Aggregator::Median),
                    None => (rest, Aggregator::Sum),
                }
            } else {
                let (w, agg) = s.strip_prefix('p').and_then(|r| r.rsplit_once('-')).ok_or_else(unknown)?;
                match agg {
                    "sum" => (w, Aggregator::Sum),
                    "median" => (w, Aggregator::Median),
                    _ => return Err(unknown()),
                }
            };
            let window = match w {
                "max" => PubWindow::Max,
                "mean" => PubWindow::Mean,
                "median" => PubWindow::Median,
                n => PubWindow::FixedAge(n.parse().map_err(|_| unknown())?),
            };
            MetricSpec::aggregate(window, aggregator)
        }
    };
    m.validate()?;
    Ok(m)
}

fn parse_benchmark(a: &CorpusArgs) -> anyhow::Result<BenchmarkSpec> {
    let mut spec = match a.benchmark.as_str() {
        "all" => BenchmarkSpec::all(),
        "tenured" => BenchmarkSpec::tenured(),
        "biology" => BenchmarkSpec::biology(),
        b => {
            if let Some(k) = b.strip_prefix("field:") {
                let kws: Vec<&str> = k.split(',').map(str::trim).filter(|k| !k.is_empty()).collect();
                if kws.is_empty() {
                    bail!("field benchmark needs at least one keyword");
                }
                BenchmarkSpec::field(&kws)
            } else if let Some(f) = b.strip_prefix("ids:") {
                let text = std::fs::read_to_string(f).with_context(|| format!("reading {f}"))?;
                let ids: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
                BenchmarkSpec::custom(&ids)
            } else {
                bail!("unknown benchmark {b:?}");
            }
        }
    };
    if let Some(c) = &a.cohort {
        let (kind, year) = c.split_once(':').ok_or_else(|| anyhow!("cohort must be pub:YEAR or career:YEAR"))?;
        let year: i32 = year.parse().with_context(|| format!("bad cohort year {year:?}"))?;
        spec = spec.with_cohort(match kind {
            "pub" => Cohort::PubYear(year),
            "career" => Cohort::CareerStart(year),
            _ => bail!("cohort must be pub:YEAR or career:YEAR"),
        });
    }
    Ok(spec)
}

struct Loaded {
    corpus: Corpus,
    hash: String,
    spec: BenchmarkSpec,
}

fn load(a: &CorpusArgs) -> anyhow::Result<Loaded> {
    let Some(path) = &a.corpus else {
        use clap::CommandFactory;
        Cli::command()
            .error(clap::error::ErrorKind::MissingRequiredArgument, "--corpus is required")
            .exit();
    };
    let corpus = io::read_bin(path)?;
    let hash = io::corpus_hash(&corpus);
    Ok(Loaded {
        corpus,
        hash,
        spec: parse_benchmark(a)?,
    })
}

struct Run {
    manifest: RunManifest,
}

impl Run {
    fn new(cli: &Cli) -> Self {
        Self {
            manifest: RunManifest::start(std::env::args().collect(), cli, cli.seed),
        }
    }

    fn corpus(&mut self, hash: &str) {
        self.manifest.corpus_hash = Some(hash.to_string());
    }

    fn finish(mut self, primary: &Path, extra: &[&Option<PathBuf>]) -> anyhow::Result<()> {
        self.manifest.record_output(primary)?;
        for p in extra.iter().filter_map(|p| p.as_ref()) {
            self.manifest.record_output(p)?;
        }
        self.manifest.finish(primary)?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = parallel::pool(cli.jobs)
        .map_err(anyhow::Error::from)
        .and_then(|pool| pool.install(|| run(&cli)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let mut r = Run::new(cli);
    match &cli.command {
        Command::Ingest(a) => {
            let format = match a.format {
                InputFormat::Jsonl => Format::Jsonl,
                InputFormat::Csv => Format::Csv,
            };
            let corpus = io::ingest(&a.input, format, a.end_year)?;
            io::write_bin(&corpus, &a.out)?;
            r.corpus(&io::corpus_hash(&corpus));
            eprintln!(
                "{} scholars, {} publications",
                corpus.scholars().len(),
                corpus.publications().len()
            );
            r.finish(&a.out, &[])
        }
        Command::Synth(a) => {
            let config = SynthConfig {
                n_scholars: a.scholars,
                career_span: a.span,
                pubs_per_year: a.pubs_per_year,
                citation_process: CitationProcess {
                    mu: a.mu,
                    sigma: a.sigma,
                    rho: a.rho,
                    drift_sd: a.drift_sd,
                },
                seed: derive_seed(cli.seed, "synth"),
                end_year: a.end_year,
                cohort_range: a.cohorts,
                quality_sd: a.quality_sd,
                tenured_share: a.tenured_share,
                inflation: a.inflation,
            };
            let mut corpus = parallel::synth(&config)?;
            if let (true, Some(y)) = (a.inject_abc, a.cohort_year) {
                corpus = synth::inject_artificial_scholars(&corpus, y)?;
            }
            let format = match a.format {
                Some(OutputFormat::Bin) => Format::Bin,
                Some(OutputFormat::Jsonl) => Format::Jsonl,
                Some(OutputFormat::Csv) => Format::Csv,
                None if a.out.extension().is_some_and(|e| e == "jsonl") => Format::Jsonl,
                None if a.out.is_dir() || a.out.extension().is_none() => Format::Csv,
                None => Format::Bin,
            };
            io::write(&corpus, &a.out, format)?;
            r.corpus(&io::corpus_hash(&corpus));
            r.finish(&a.out, &[])
        }
        Command::Percentile(a) => {
            let l = load(&a.input)?;
            r.corpus(&l.hash);
            percentile_cmd(a, &l)?;
            r.finish(&a.out, &[])
        }
        Command::Stability(a) => {
            match &a.percentiles {
                Some(_) => stability_cmd(a, None)?,
                None => {
                    let l = load(&a.input)?;
                    r.corpus(&l.hash);
                    stability_cmd(a, Some(&l))?;
                }
            }
            r.finish(&a.out, &[&a.binned, &a.scatter, &a.report])
        }
        Command::Agreement(a) => {
            let l = load(&a.input)?;
            r.corpus(&l.hash);
            agreement_cmd(a, &l)?;
            r.finish(&a.out, &[&a.wilcoxon, &a.report])
        }
        Command::Stationarity(a) => {
            match &a.percentiles {
                Some(_) => stationarity_cmd(a, None)?,
                None => {
                    let l = load(&a.input)?;
                    r.corpus(&l.hash);
                    stationarity_cmd(a, Some(&l))?;
                }
            }
            r.finish(&a.out, &[&a.cohorts, &a.trend])
        }
        Command::Features(a) => {
            let l = load(&a.input)?;
            r.corpus(&l.hash);
            let task = Task::new(a.task.into(), a.t1, a.t2)?;
            let ctx = FeatureContext::from_corpus(&l.corpus, &l.spec)?;
            let m = parallel::feature_matrix(&ctx, task)?;
            let mut w = output::csv_writer(&a.out)?;
            let mut header = vec!["entity_id".to_string(), "ambiguous_owner".into()];
            header.extend(m.columns.iter().cloned());
            header.push(m.target_name().into());
            w.write_record(&header)?;
            for i in 0..m.len() {
                let mut rec = vec![m.entity_ids[i].clone(), m.ambiguous_owner[i].to_string()];
                rec.extend(m.rows[i].iter().map(|v| v.to_string()));
                rec.push(m.target[i].to_string());
                w.write_record(&rec)?;
            }
            w.flush()?;
            r.finish(&a.out, &[])
        }
        Command::Predict(a) => {
            let l = load(&a.input)?;
            r.corpus(&l.hash);
            predict_cmd(a, &l, cli.seed)?;
            r.finish(&a.out, &[&a.coefficients])
        }
        Command::Report(a) => {
            let rows: Vec<ResultRow> = output::read_csv(&a.results)?;
            let report = output::build_report(&rows);
            match &a.out {
                Some(out) => {
                    output::write_json(out, &report)?;
                    r.manifest.record_output(&a.results)?;
                    r.finish(out, &[])
                }
                None => {
                    println!("{}", serde_json::to_string_pretty(&report)?);
                    Ok(())
                }
            }
        }
    }
}

fn percentile_cmd(a: &PercentileArgs, l: &Loaded) -> anyhow::Result<()> {
    let b = Benchmark::new(&l.corpus, &l.spec)?;
    let cache = PercentileCache::from_env();
    if let Some(t1) = a.future_works {
        let p5 = OnceLock::new();
        let t2s: Vec<Age> = a.ages.iter().copied().filter(|&t| t > t1).collect();
        if t2s.is_empty() {
            bail!("no age in --ages exceeds --future-works {t1}");
        }
        let maps = par_map(&t2s, |&t2| {
            cache.get_or_compute(&l.hash, &l.spec, &"future-works", (t1, t2), || {
                let p5 = p5.get_or_init(|| b.pub_summaries(PubWindow::FixedAge(5)));
                let p5 = p5.as_ref().map_err(Clone::clone)?;
                let ranked = match b.future_works_percentiles(p5, t1, t2) {
                    Ok(r) => r,
                    Err(impact_rank_core::Error::Eligibility(_)) => return Ok(PercentileMap::new()),
                    Err(e) => return Err(e.into()),
                };
                Ok(b.scholar_map(&ranked))
            })
        })?;
        let rows = t2s.iter().zip(&maps).flat_map(|(&t2, m)| {
            m.iter().map(move |(id, &p)| FutureWorksRow {
                scholar_id: id.clone(),
                t1,
                t2,
                percentile: p,
            })
        });
        return Ok(output::write_csv(&a.out, rows)?);
    }
    let metric = parse_metric(&a.metric)?;
    let summaries = OnceLock::new();
    let maps = par_map(&a.ages, |&t| {
        cache.get_or_compute(&l.hash, &l.spec, &metric, (t, 0), || {
            let ranked = match metric.target {
                Target::Publication => b.pub_percentiles(t),
                Target::Scholar => {
                    let s = summaries.get_or_init(|| b.summaries_for(&metric));
                    let s = s.as_ref().map_err(Clone::clone)?;
                    b.scholar_percentiles(&metric, t, s.as_deref())
                }
            };
            match ranked {
                Ok(r) if metric.target == Target::Publication => Ok(b.pub_map(&r)),
                Ok(r) => Ok(b.scholar_map(&r)),
                Err(impact_rank_core::Error::Eligibility(_)) => Ok(PercentileMap::new()),
                Err(e) => Err(e.into()),
            }
        })
    })?;
    let rows = a.ages.iter().zip(&maps).flat_map(|(&t, m)| {
        m.iter().map(move |(id, &p)| PercentileRow {
            entity_id: id.clone(),
            age: t,
            percentile: p,
            n_benchmark: m.len(),
        })
    });
    Ok(output::write_csv(&a.out, rows)?)
}

fn par_map<T: Sync, U: Send>(
    items: &[T],
    f: impl Fn(&T) -> impact_rank::Result<U> + Sync + Send,
) -> impact_rank::Result<Vec<U>> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

fn series_for(b: &Benchmark, metric: &MetricSpec, ages: &[Age]) -> anyhow::Result<Vec<PercentileSeries>> {
    Ok(match metric.target {
        Target::Publication => parallel::publication_series(b, ages)?,
        Target::Scholar => parallel::scholar_series(b, metric, ages)?,
    })
}

/// Series from a `percentile` CSV, one per entity.
fn read_series(path: &Path, metric: &MetricSpec) -> anyhow::Result<Vec<PercentileSeries>> {
    let rows: Vec<PercentileRow> = output::read_csv(path)?;
    let mut by_id: BTreeMap<String, PercentileSeries> = BTreeMap::new();
    for r in rows {
        let s = by_id
            .entry(r.entity_id.clone())
            .or_insert_with(|| PercentileSeries::new(r.entity_id, BenchmarkSpec::all(), *metric));
        s.values.insert(r.age, r.percentile);
        s.benchmark_size.insert(r.age, r.n_benchmark);
    }
    Ok(by_id.into_values().collect())
}

fn stability_cmd(a: &StabilityArgs, l: Option<&Loaded>) -> anyhow::Result<()> {
    let b = l.map(|l| Benchmark::new(&l.corpus, &l.spec)).transpose()?;
    let metric = parse_metric(&a.metric)?;
    let pairs: Vec<(Age, Age)> = a
        .t1
        .iter()
        .flat_map(|&t1| a.t2.iter().filter(move |&&t2| t2 > t1).map(move |&t2| (t1, t2)))
        .collect();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut scatter = Vec::new();
    let mut cell = |t1: Age, t2: Age, ids: Vec<&str>, x: Vec<f64>, y: Vec<f64>| -> anyhow::Result<()> {
        let fit = ols_fit(&x, &y).ok();
        let r = pearson(&x, &y)?;
        rows.push(MatrixRow {
            t1,
            t2,
            pearson: r,
            slope: fit.as_ref().map(|f| f.slope),
            intercept: fit.as_ref().map(|f| f.intercept),
            n: x.len(),
        });
        fits.push(StabilityCell {
            t1,
            t2,
            pearson: r,
            n: x.len(),
            fit,
        });
        if a.scatter.is_some() {
            for ((id, e), l) in ids.iter().zip(&x).zip(&y) {
                scatter.push(ScatterRow {
                    t1,
                    t2,
                    entity_id: id.to_string(),
                    early: *e,
                    late: *l,
                });
            }
        }
        Ok(())
    };
    if a.future_works {
        let Some(b) = &b else { bail!("--future-works needs --corpus") };
        if metric != MetricSpec::p5_sum() {
            bail!("--future-works compares S_P5 only; use --metric p5-sum");
        }
        let series = parallel::scholar_series(b, &metric, &a.t1)?;
        let p5 = b.pub_summaries(PubWindow::FixedAge(5))?;
        let fw = par_map(&pairs, |&(t1, t2)| match b.future_works_percentiles(&p5, t1, t2) {
            Ok(r) => Ok(b.scholar_map(&r)),
            Err(impact_rank_core::Error::Eligibility(_)) => Ok(PercentileMap::new()),
            Err(e) => Err(e.into()),
        })?;
        for (&(t1, t2), late) in pairs.iter().zip(&fw) {
            let (mut ids, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
            for s in &series {
                if let (Some(e), Some(&v)) = (s.get(t1), late.get(&s.entity_id)) {
                    ids.push(s.entity_id.as_str());
                    x.push(e);
                    y.push(v);
                }
            }
            if x.len() >= 2 {
                cell(t1, t2, ids, x, y)?;
            }
        }
    } else {
        let ages: Vec<Age> = a.t1.iter().chain(&a.t2).copied().collect();
        let series = match (&b, &a.percentiles) {
            (Some(b), _) => series_for(b, &metric, &ages)?,
            (None, Some(p)) => read_series(p, &metric)?,
            (None, None) => bail!("--corpus or --percentiles is required"),
        };
        let matrix = analysis::stability_matrix(&series, &a.t1, &a.t2)?;
        let kept: Vec<&PercentileSeries> = series.iter().filter(|s| s.covers(ages.iter().copied())).collect();
        for c in &matrix.cells {
            let ids = kept.iter().map(|s| s.entity_id.as_str()).collect();
            let x = kept.iter().map(|s| s.values[&c.t1]).collect();
            let y = kept.iter().map(|s| s.values[&c.t2]).collect();
            cell(c.t1, c.t2, ids, x, y)?;
        }
    }
    output::write_csv(&a.out, rows)?;
    if let Some(p) = &a.scatter {
        output::write_csv(p, scatter)?;
    }
    if let Some(p) = &a.report {
        output::write_json(p, &fits)?;
    }
    if let Some(p) = &a.binned {
        let Some(b) = &b else { bail!("--binned needs --corpus") };
        let raw = |t: Age| -> anyhow::Result<BTreeMap<String, f64>> {
            Ok(match metric.target {
                Target::Publication => b
                    .pub_citations(t)
                    .iter()
                    .zip(b.corpus().publications())
                    .filter_map(|(c, p)| c.map(|c| (p.pub_id.clone(), c as f64)))
                    .collect(),
                Target::Scholar if metric.kind == MetricKind::Citations => b
                    .scholar_values(&metric, t, None)?
                    .iter()
                    .zip(b.corpus().scholars())
                    .filter_map(|(c, s)| c.map(|c| (s.scholar_id.clone(), c)))
                    .collect(),
                _ => bail!("--binned needs --metric pc or sc"),
            })
        };
        let mut out = Vec::new();
        for &(t1, t2) in &pairs {
            let (early, late) = (raw(t1)?, raw(t2)?);
            if early.is_empty() || late.is_empty() {
                continue;
            }
            for pt in log_binned_average(&early, &late, a.bins)? {
                out.push(BinnedRow {
                    t1,
                    t2,
                    lower: pt.lower,
                    upper: pt.upper,
                    mean_early: pt.mean_early,
                    mean_late: pt.mean_late,
                    count: pt.count,
                });
            }
        }
        output::write_csv(p, out)?;
    }
    Ok(())
}

fn scholar_maps(b: &Benchmark, metric: &MetricSpec, ages: &[Age]) -> anyhow::Result<BTreeMap<Age, PercentileMap>> {
    Ok(parallel::scholar_rankings(b, metric, ages)?
        .into_iter()
        .map(|(t, r)| (t, b.scholar_map(&r)))
        .collect())
}

fn agreement_cmd(a: &AgreementArgs, l: &Loaded) -> anyhow::Result<()> {
    let b = Benchmark::new(&l.corpus, &l.spec)?;
    let sc = scholar_maps(&b, &MetricSpec::scholar_citations(), &a.ages)?;
    let sh = scholar_maps(&b, &MetricSpec::h_index(), &a.ages)?;
    let sp = scholar_maps(&b, &MetricSpec::p5_sum(), &a.ages)?;
    let mut rows = Vec::new();
    for t in &a.ages {
        let (Some(c), Some(h), Some(p)) = (sc.get(t), sh.get(t), sp.get(t)) else {
            continue;
        };
        let ag = match agreement(&[c, h, p]) {
            Ok(ag) => ag,
            Err(impact_rank_core::Error::Degenerate(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        rows.push(AgreementRow {
            age: *t,
            fraction: ag.fraction,
            n: ag.n,
            sc_sh: ag.tables[0].agreement(),
            sc_sp5: ag.tables[1].agreement(),
            sh_sp5: ag.tables[2].agreement(),
        });
    }
    output::write_csv(&a.out, &rows)?;
    let mut tests = Vec::new();
    if a.wilcoxon.is_some() || a.report.is_some() {
        let names: Vec<&str> = a.compare.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if names.len() < 2 {
            bail!("--compare needs at least two metrics");
        }
        let maps = names
            .iter()
            .map(|n| {
                let m = parse_metric(n)?;
                if m.target != Target::Scholar {
                    bail!("--compare takes scholar metrics, got {n}");
                }
                scholar_maps(&b, &m, &a.ages)
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        for t in &a.ages {
            let Some(base) = maps[0].get(t) else { continue };
            for (j, other) in maps.iter().enumerate().skip(1) {
                let Some(other) = other.get(t) else { continue };
                let (x, y): (Vec<f64>, Vec<f64>) = base
                    .iter()
                    .filter_map(|(id, &v)| other.get(id).map(|&w| (v, w)))
                    .unzip();
                if x.is_empty() {
                    continue;
                }
                let w = analysis::wilcoxon_signed_rank(&x, &y)?;
                tests.push(WilcoxonRow {
                    age: *t,
                    metric_a: names[0].into(),
                    metric_b: names[j].into(),
                    statistic: w.statistic,
                    p_value: w.p_value,
                    n: w.n,
                    exact: w.exact,
                    degenerate: w.degenerate,
                });
            }
        }
    }
    if let Some(p) = &a.wilcoxon {
        output::write_csv(p, &tests)?;
    }
    if let Some(p) = &a.report {
        output::write_json(
            p,
            &AgreementReport {
                agreement: rows,
                wilcoxon: tests,
            },
        )?;
    }
    Ok(())
}

fn stationarity_row(id: &str, series: &str, test: TestKind, x: &[f64]) -> anyhow::Result<StationarityRow> {
    let r = match test {
        TestKind::Adf => adf_test(x),
        TestKind::Kpss => kpss_test(x),
    };
    let row = |statistic, reject, degenerate| StationarityRow {
        entity_id: id.into(),
        test: test_name(test).into(),
        series: series.into(),
        statistic,
        critical_5pct: critical(test),
        reject,
        length: x.len(),
        degenerate,
    };
    match r {
        Ok(r) => Ok(row(Some(r.statistic), Some(r.reject_null), r.degenerate)),
        Err(impact_rank_core::Error::Degenerate(_)) => Ok(row(None, None, true)),
        Err(e) => Err(e.into()),
    }
}

fn test_name(test: TestKind) -> &'static str {
    match test {
        TestKind::Adf => "adf",
        TestKind::Kpss => "kpss",
    }
}

fn critical(test: TestKind) -> f64 {
    match test {
        TestKind::Adf => stationarity::ADF_CRITICAL_5PCT,
        TestKind::Kpss => stationarity::KPSS_CRITICAL_5PCT,
    }
}

fn stationarity_cmd(a: &StationarityArgs, l: Option<&Loaded>) -> anyhow::Result<()> {
    let metric = parse_metric(&a.metric)?;
    let mut ages = a.ages.clone();
    if let Some(t) = a.difference_from {
        if !ages.contains(&t) {
            ages.push(t);
            ages.sort_unstable();
        }
    }
    let shortest = match a.difference_from {
        Some(t1) => a.ages.iter().filter(|&&t| t > t1).count().min(a.ages.len() - 1),
        None => a.ages.len() - 1,
    };
    if shortest < stationarity::MIN_LENGTH {
        bail!(
            "--ages leaves a series of {shortest} points; the tests need at least {}",
            stationarity::MIN_LENGTH
        );
    }
    let series = match (l, &a.percentiles) {
        (Some(l), _) => series_for(&Benchmark::new(&l.corpus, &l.spec)?, &metric, &ages)?,
        (None, Some(p)) => read_series(p, &metric)?,
        (None, None) => bail!("--corpus or --percentiles is required"),
    };
    let full: Vec<&PercentileSeries> = series.iter().filter(|s| s.covers(ages.iter().copied())).collect();
    let rows = par_map(&full, |s| {
        let level: Vec<f64> = a.ages.iter().map(|t| s.values[t]).collect();
        let diff = first_difference(&level);
        let delta: Option<Vec<f64>> = match a.difference_from {
            Some(t1) => {
                let t2s: Vec<Age> = a.ages.iter().copied().filter(|&t| t > t1).collect();
                Some(
                    stationarity::difference(s, t1, &t2s)
                        .map_err(|e| impact_rank::Error::Format(format!("{}: {e}", s.entity_id)))?
                        .into_values()
                        .collect(),
                )
            }
            None => None,
        };
        let mut out = Vec::with_capacity(6);
        let named = [("level", Some(&level)), ("diff", Some(&diff)), ("delta", delta.as_ref())];
        for (name, x) in named.into_iter().filter_map(|(n, x)| x.map(|x| (n, x))) {
            for test in [TestKind::Adf, TestKind::Kpss] {
                out.push(
                    stationarity_row(&s.entity_id, name, test, x)
                        .map_err(|e| impact_rank::Error::Format(format!("{}: {e:#}", s.entity_id)))?,
                );
            }
        }
        Ok(out)
    })?;
    output::write_csv(&a.out, rows.into_iter().flatten())?;
    if let (Some(l), true) = (l, a.cohorts.is_some() || a.trend.is_some()) {
        let dist = cohort_distribution(&l.corpus, &l.spec, &metric, a.cohort_age)?;
        if let Some(p) = &a.cohorts {
            let rows = dist.iter().filter_map(|(&y, v)| {
                let mut v = v.clone();
                v.sort_by(f64::total_cmp);
                let n = v.len();
                (n > 0).then(|| CohortRow {
                    cohort: y,
                    median: if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 },
                    n,
                })
            });
            output::write_csv(p, rows)?;
        }
        if let Some(p) = &a.trend {
            output::write_json(p, &trend_test(&dist)?)?;
        }
    }
    Ok(())
}

fn predict_cmd(a: &PredictArgs, l: &Loaded, seed: u64) -> anyhow::Result<()> {
    let kind: TargetKind = a.task.into();
    let models = a
        .models
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|m| ModelKind::from_name(m).ok_or_else(|| anyhow!("unknown model {m:?}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if models.is_empty() {
        bail!("no models given");
    }
    let tasks = match (a.t1, a.t2) {
        (Some(t1), Some(t2)) => vec![Task::new(kind, t1, t2)?],
        _ => predict::grid_tasks(kind),
    };
    let ctx = FeatureContext::from_corpus(&l.corpus, &l.spec)?;
    let results = parallel::run_tasks(&ctx, kind, &tasks, &models, seed)?;
    output::write_csv(&a.out, results.iter().map(ResultRow::from))?;
    if let Some(p) = &a.coefficients {
        output::write_csv(p, results.iter().flat_map(output::coefficient_rows))?;
    }
    Ok(())
}
