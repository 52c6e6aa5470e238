//! CSV and JSON artifacts. CSV follows RFC 4180 quoting; JSON maps are
//! `BTreeMap`s so key order is stable.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use impact_rank_core::analysis::OlsFit;
use impact_rank_core::features::TargetKind;
use impact_rank_core::predict::FitResult;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn write_csv<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::parse(path, line, e)
            })
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub entity_id: String,
    pub age: u32,
    pub percentile: f64,
    pub n_benchmark: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FutureWorksRow {
    pub scholar_id: String,
    pub t1: u32,
    pub t2: u32,
    pub percentile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub t1: u32,
    pub t2: u32,
    pub pearson: f64,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedRow {
    pub t1: u32,
    pub t2: u32,
    pub lower: f64,
    pub upper: f64,
    pub mean_early: f64,
    pub mean_late: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub t1: u32,
    pub t2: u32,
    pub entity_id: String,
    pub early: f64,
    pub late: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub age: u32,
    pub fraction: f64,
    pub n: usize,
    pub sc_sh: f64,
    pub sc_sp5: f64,
    pub sh_sp5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonRow {
    pub age: u32,
    pub metric_a: String,
    pub metric_b: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub exact: bool,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRow {
    pub entity_id: String,
    pub test: String,
    /// `level`, `diff` (first differences) or `delta` (difference from a fixed age).
    pub series: String,
    pub statistic: Option<f64>,
    pub critical_5pct: f64,
    pub reject: Option<bool>,
    pub length: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub cohort: i32,
    pub median: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub t1: u32,
    pub t2: u32,
    pub r2: Option<f64>,
    pub rmse: f64,
    pub medse: f64,
    pub mae: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub task: String,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub dropped_delta: bool,
    pub cv_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub task: String,
    pub t1: u32,
    pub t2: u32,
    pub model: String,
    pub name: String,
    pub value: f64,
}

pub fn task_label(kind: TargetKind) -> &'static str {
    match kind {
        TargetKind::Publication => "pub",
        TargetKind::Scholar => "scholar",
        TargetKind::FutureWorks => "future",
    }
}

impl From<&FitResult> for ResultRow {
    fn from(r: &FitResult) -> Self {
        Self {
            task: task_label(r.task.kind).into(),
            t1: r.task.t1,
            t2: r.task.t2,
            model: r.model.name().into(),
            r2: r.test_r2,
            rmse: r.test_rmse,
            medse: r.test_medse,
            mae: r.test_mae,
            n_train: r.n_train,
            n_test: r.n_test,
            lambda: r.lambda,
            alpha: r.alpha,
            dropped_delta: r.dropped_delta,
            cv_skipped: r.cv_skipped,
        }
    }
}

pub fn coefficient_rows(r: &FitResult) -> Vec<CoefficientRow> {
    r.coefficients
        .iter()
        .map(|(name, &value)| CoefficientRow {
            task: task_label(r.task.kind).into(),
            t1: r.task.t1,
            t2: r.task.t2,
            model: r.model.name().into(),
            name: name.clone(),
            value,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelErrors {
    pub r2: Option<f64>,
    pub rmse: f64,
    pub medse: f64,
    pub mae: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub t1: u32,
    pub t2: u32,
    pub models: BTreeMap<String, ModelErrors>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub tasks: usize,
    /// Mean over tasks with a defined R².
    pub mean_r2: Option<f64>,
    pub mean_rmse: f64,
    pub mean_mae: f64,
}

/// Per-task error table with one column group per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tasks: Vec<TaskReport>,
    pub models: BTreeMap<String, ModelSummary>,
}

pub fn build_report(rows: &[ResultRow]) -> Report {
    let mut tasks: BTreeMap<(String, u32, u32), BTreeMap<String, ModelErrors>> = BTreeMap::new();
    for r in rows {
        tasks.entry((r.task.clone(), r.t1, r.t2)).or_default().insert(
            r.model.clone(),
            ModelErrors {
                r2: r.r2,
                rmse: r.rmse,
                medse: r.medse,
                mae: r.mae,
                n_test: r.n_test,
            },
        );
    }
    let mut by_model: BTreeMap<String, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        by_model.entry(r.model.clone()).or_default().push(r);
    }
    let models = by_model
        .into_iter()
        .map(|(m, rs)| {
            let r2: Vec<f64> = rs.iter().filter_map(|r| r.r2).collect();
            let n = rs.len() as f64;
            (
                m,
                ModelSummary {
                    tasks: rs.len(),
                    mean_r2: (!r2.is_empty()).then(|| r2.iter().sum::<f64>() / r2.len() as f64),
                    mean_rmse: rs.iter().map(|r| r.rmse).sum::<f64>() / n,
                    mean_mae: rs.iter().map(|r| r.mae).sum::<f64>() / n,
                },
            )
        })
        .collect();
    Report {
        tasks: tasks
            .into_iter()
            .map(|((task, t1, t2), models)| TaskReport { task, t1, t2, models })
            .collect(),
        models,
    }
}

/// One stability cell with its regression of late on early percentiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCell {
    pub t1: u32,
    pub t2: u32,
    pub pearson: f64,
    pub n: usize,
    pub fit: Option<OlsFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub agreement: Vec<AgreementRow>,
    pub wilcoxon: Vec<WilcoxonRow>,
}
