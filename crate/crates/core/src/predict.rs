//! Baseline, Markov and penalized linear models over feature matrices.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{BenchmarkSpec, Corpus};
use crate::error::{degenerate, domain, Result};
use crate::features::{FeatureContext, FeatureMatrix, TargetKind, Task};
use crate::linalg::least_squares;
use crate::seed::derive_seed;
use crate::{math, Age, MAX_AGE};

pub const TRAIN_RATIO: f64 = 0.9;
pub const MIN_ROWS: usize = 10;
pub const CV_FOLDS: usize = 10;
pub const LAMBDA_POINTS: usize = 50;
/// Smallest grid penalty relative to the largest.
pub const LAMBDA_RATIO: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-7;
pub const MAX_SWEEPS: usize = 10_000;
pub const T1_VALUES: [Age; 5] = [5, 10, 15, 20, 25];

/// Train/test assignment of entity ids, drawn once and reused across tasks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySplit {
    pub train: BTreeSet<String>,
    pub test: BTreeSet<String>,
}

impl EntitySplit {
    pub fn new<S: AsRef<str>>(ids: &[S], ratio: f64, seed: u64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(domain!("train ratio must lie in (0, 1), got {}", ratio));
        }
        let mut ids: Vec<String> = ids.iter().map(|s| String::from(s.as_ref())).collect();
        ids.sort();
        ids.dedup();
        let n = ids.len();
        if n < MIN_ROWS {
            return Err(domain!("need at least {} rows to split, got {}", MIN_ROWS, n));
        }
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = (math::round(ratio * n as f64) as usize).clamp(1, n - 1);
        let test = ids.split_off(n_train);
        Ok(Self {
            train: ids.into_iter().collect(),
            test: test.into_iter().collect(),
        })
    }

    /// Rows of `m` in the train and test sets; rows in neither are ignored.
    pub fn apply(&self, m: &FeatureMatrix) -> (FeatureMatrix, FeatureMatrix) {
        let pick = |set: &BTreeSet<String>| -> Vec<usize> {
            (0..m.len()).filter(|&i| set.contains(&m.entity_ids[i])).collect()
        };
        (m.select(&pick(&self.train)), m.select(&pick(&self.test)))
    }
}

/// Splits a matrix by rows.
pub fn split(m: &FeatureMatrix, ratio: f64, seed: u64) -> Result<(FeatureMatrix, FeatureMatrix)> {
    Ok(EntitySplit::new(&m.entity_ids, ratio, seed)?.apply(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Baseline,
    Markov,
    Ridge,
    Lasso,
    ElasticNet,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Baseline,
        ModelKind::Markov,
        ModelKind::Ridge,
        ModelKind::Lasso,
        ModelKind::ElasticNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Baseline => "baseline",
            ModelKind::Markov => "markov",
            ModelKind::Ridge => "ridge",
            ModelKind::Lasso => "lasso",
            ModelKind::ElasticNet => "enet",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_penalized(self) -> bool {
        matches!(self, ModelKind::Ridge | ModelKind::Lasso | ModelKind::ElasticNet)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Mixing values: 0 is ridge, 1 is lasso. Empty for unpenalized models.
    pub alphas: Vec<f64>,
    pub lambda_points: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        let alphas = match kind {
            ModelKind::Baseline | ModelKind::Markov => vec![],
            ModelKind::Ridge => vec![0.0],
            ModelKind::Lasso => vec![1.0],
            ModelKind::ElasticNet => (1..=9).map(|i| f64::from(i) / 10.0).collect(),
        };
        Self {
            kind,
            alphas,
            lambda_points: if kind.is_penalized() { LAMBDA_POINTS } else { 0 },
        }
    }
}

/// A fitted linear model of the delta target on the original feature scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub columns: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    /// The Markov delta column was collinear and dropped.
    pub dropped_delta: bool,
    /// Penalty grid points left out of tuning because a fit did not converge.
    pub cv_skipped: usize,
}

impl Model {
    fn indices(&self, m: &FeatureMatrix) -> Result<Vec<usize>> {
        self.columns
            .iter()
            .map(|c| m.column_index(c).ok_or_else(|| domain!("matrix lacks column {}", c)))
            .collect()
    }

    pub fn predict_delta(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        let idx = self.indices(m)?;
        Ok(m.rows
            .iter()
            .map(|r| self.intercept + idx.iter().zip(&self.coefficients).map(|(&j, b)| r[j] * b).sum::<f64>())
            .collect())
    }

    /// Autoregressive value plus predicted delta.
    pub fn predict_level(&self, m: &FeatureMatrix) -> Result<Vec<f64>> {
        Ok(m.autoregressive()
            .iter()
            .zip(self.predict_delta(m)?)
            .map(|(a, d)| a + d)
            .collect())
    }

    pub fn named_coefficients(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = self.columns.iter().cloned().zip(self.coefficients.iter().copied()).collect();
        out.insert("intercept".into(), self.intercept);
        out
    }
}

fn ols_with_intercept(m: &FeatureMatrix, cols: &[&str]) -> Option<(f64, Vec<f64>)> {
    let idx: Vec<usize> = cols.iter().map(|c| m.column_index(c).expect("column")).collect();
    let k = idx.len() + 1;
    let mut x = Vec::with_capacity(m.len() * k);
    for r in &m.rows {
        x.push(1.0);
        x.extend(idx.iter().map(|&j| r[j]));
    }
    let fit = least_squares(&x, &m.target, k)?;
    Some((fit.coef[0], fit.coef[1..].to_vec()))
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// One-feature OLS of the delta target on the autoregressive value.
pub fn fit_baseline(train: &FeatureMatrix) -> Result<Model> {
    if train.len() < 2 {
        return Err(domain!("need at least two training rows"));
    }
    let ar = train.task.kind.autoregressive_column();
    if is_constant(&train.autoregressive()) {
        return Err(degenerate!("autoregressive feature is constant"));
    }
    let (intercept, coefficients) = ols_with_intercept(train, &[ar]).ok_or_else(|| degenerate!("singular baseline fit"))?;
    Ok(Model {
        kind: ModelKind::Baseline,
        columns: vec![ar.into()],
        intercept,
        coefficients,
        lambda: None,
        alpha: None,
        dropped_delta: false,
        cv_skipped: 0,
    })
}

/// OLS on the autoregressive value and its change over the previous two ages.
/// A collinear change column is dropped, which reduces the fit to the baseline.
pub fn fit_markov(train: &FeatureMatrix) -> Result<Model> {
    let kind = train.task.kind;
    let (ar, delta) = (kind.autoregressive_column(), kind.markov_column());
    let d = train.column(delta).ok_or_else(|| domain!("matrix lacks column {}", delta))?;
    let fit = if is_constant(&d) { None } else { ols_with_intercept(train, &[ar, delta]) };
    match fit {
        Some((intercept, coefficients)) => Ok(Model {
            kind: ModelKind::Markov,
            columns: vec![ar.into(), delta.into()],
            intercept,
            coefficients,
            lambda: None,
            alpha: None,
            dropped_delta: false,
            cv_skipped: 0,
        }),
        None => Ok(Model {
            kind: ModelKind::Markov,
            dropped_delta: true,
            ..fit_baseline(train)?
        }),
    }
}

/// Result of one coordinate-descent solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CdSolution {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    /// Objective after every sweep.
    pub objective: Vec<f64>,
    /// The last sweep moved no coefficient by [`TOLERANCE`] or more.
    pub converged: bool,
}

/// Minimises `(1/2) b'Gb - c'b + lambda (alpha |b|_1 + (1 - alpha)/2 |b|^2)`,
/// the penalized least-squares objective up to the constant `y'y / 2n`, where
/// `G = X'X / n` and `c = X'y / n`. Coordinates with `G_jj = 0` stay at zero.
pub fn coordinate_descent(
    gram: &[f64],
    c: &[f64],
    lambda: f64,
    alpha: f64,
    warm: Option<&[f64]>,
) -> Result<CdSolution> {
    let sol = descend(gram, c, lambda, alpha, warm)?;
    if !sol.converged {
        return Err(crate::Error::Convergence {
            sweeps: sol.sweeps,
            max_change: sol.max_change,
        });
    }
    Ok(sol.into_solution())
}

struct Descent {
    beta: Vec<f64>,
    sweeps: usize,
    objective: Vec<f64>,
    converged: bool,
    max_change: f64,
}

impl Descent {
    fn into_solution(self) -> CdSolution {
        CdSolution {
            beta: self.beta,
            sweeps: self.sweeps,
            objective: self.objective,
            converged: self.converged,
        }
    }
}

/// Runs at most [`MAX_SWEEPS`] sweeps and reports whether they converged.
fn descend(gram: &[f64], c: &[f64], lambda: f64, alpha: f64, warm: Option<&[f64]>) -> Result<Descent> {
    let p = c.len();
    if gram.len() != p * p {
        return Err(domain!("Gram matrix must be {0}x{0}", p));
    }
    if !(lambda >= 0.0) || !(0.0..=1.0).contains(&alpha) {
        return Err(domain!("invalid penalty lambda={} alpha={}", lambda, alpha));
    }
    let mut beta = warm.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; p]);
    // grad[j] = c_j - sum_k G_jk b_k
    let mut grad: Vec<f64> = (0..p)
        .map(|j| c[j] - (0..p).map(|k| gram[j * p + k] * beta[k]).sum::<f64>())
        .collect();
    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);
    let objective = |beta: &[f64], grad: &[f64]| -> f64 {
        // (1/2) b'Gb - c'b = -(1/2) b'(c + grad)
        let quad: f64 = (0..p).map(|j| -0.5 * beta[j] * (c[j] + grad[j])).sum();
        let pen: f64 = beta.iter().map(|b| l1 * math::abs(*b) + 0.5 * l2 * b * b).sum();
        quad + pen
    };
    let mut trace = Vec::new();
    let mut last_change = f64::INFINITY;
    let mut signs: Vec<i8> = Vec::new();
    let mut stable = 0usize;
    for sweep in 1..=MAX_SWEEPS {
        if stable >= NEWTON_AFTER && stable.is_multiple_of(NEWTON_AFTER) {
            orthant_step(gram, c, l1, l2, &mut beta, &mut grad, &objective);
        }
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let gjj = gram[j * p + j];
            if gjj <= 0.0 {
                continue;
            }
            let z = grad[j] + gjj * beta[j];
            let new = soft_threshold(z, l1) / (gjj + l2);
            let delta = new - beta[j];
            if delta != 0.0 {
                for k in 0..p {
                    grad[k] -= gram[k * p + j] * delta;
                }
                beta[j] = new;
                max_change = max_change.max(math::abs(delta));
            }
        }
        let obj = objective(&beta, &grad);
        if let Some(&prev) = trace.last() {
            debug_assert!(obj <= prev + 1e-9 * (1.0 + math::abs(prev)), "objective rose from {prev} to {obj}");
        }
        trace.push(obj);
        last_change = max_change;
        let now: Vec<i8> = beta.iter().map(|b| sign(*b)).collect();
        stable = if now == signs { stable + 1 } else { 0 };
        signs = now;
        if max_change < TOLERANCE {
            return Ok(Descent {
                beta,
                sweeps: sweep,
                objective: trace,
                converged: true,
                max_change,
            });
        }
    }
    Ok(Descent {
        beta,
        sweeps: MAX_SWEEPS,
        objective: trace,
        converged: false,
        max_change: last_change,
    })
}

/// Sweeps with an unchanged sign pattern between orthant steps.
const NEWTON_AFTER: usize = 3;

fn sign(b: f64) -> i8 {
    if b > 0.0 {
        1
    } else if b < 0.0 {
        -1
    } else {
        0
    }
}

/// Moves `beta` towards the minimiser of the objective restricted to its
/// current orthant face, where the objective is the quadratic
/// `(1/2) b'(G + l2 I)b - (c - l1 s)'b` in the nonzero coordinates. The step
/// stops where a coordinate would change sign, so the objective cannot rise.
/// Skipped when the active block is singular.
fn orthant_step(
    gram: &[f64],
    c: &[f64],
    l1: f64,
    l2: f64,
    beta: &mut [f64],
    grad: &mut [f64],
    objective: &impl Fn(&[f64], &[f64]) -> f64,
) {
    let p = c.len();
    let before = objective(beta, grad);
    let old = beta.to_vec();
    // Coordinates that reach zero leave the active set and the reduced
    // system is solved again from the boundary point.
    let mut active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0 && gram[j * p + j] > 0.0).collect();
    for _ in 0..active.len() {
        let Some(target) = newton_target(gram, c, l1, l2, beta, &active) else {
            break;
        };
        let mut t: f64 = 1.0;
        let mut blocking = None;
        for (a, &j) in active.iter().enumerate() {
            if sign(target[a]) != sign(beta[j]) {
                let tj = beta[j] / (beta[j] - target[a]);
                if tj < t {
                    t = tj;
                    blocking = Some(a);
                }
            }
        }
        let signs: Vec<i8> = active.iter().map(|&j| sign(beta[j])).collect();
        for (a, &j) in active.iter().enumerate() {
            let v = beta[j] + t * (target[a] - beta[j]);
            beta[j] = if sign(v) == signs[a] && blocking != Some(a) { v } else { 0.0 };
        }
        if blocking.is_none() {
            break;
        }
        active.retain(|&j| beta[j] != 0.0);
        if active.is_empty() {
            break;
        }
    }
    for j in 0..p {
        grad[j] = c[j] - (0..p).map(|k| gram[j * p + k] * beta[k]).sum::<f64>();
    }
    if !(objective(beta, grad) <= before) {
        beta.copy_from_slice(&old);
        for j in 0..p {
            grad[j] = c[j] - (0..p).map(|k| gram[j * p + k] * beta[k]).sum::<f64>();
        }
    }
}

/// Minimiser of the smooth objective restricted to `active` with the signs
/// of `beta` held fixed, or `None` when the block cannot be inverted.
fn newton_target(gram: &[f64], c: &[f64], l1: f64, l2: f64, beta: &[f64], active: &[usize]) -> Option<Vec<f64>> {
    let p = c.len();
    let k = active.len();
    let mut m = vec![0.0; k * k];
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            m[a * k + b] = gram[i * p + j];
        }
        m[a * k + a] += l2;
    }
    let inv = match crate::linalg::invert(&m, k) {
        Some(inv) => inv,
        None => {
            // Collinear active columns: a slightly damped step still moves
            // along the flat directions until a coefficient reaches zero.
            let damping = 1e-8 * (0..k).map(|a| m[a * k + a]).fold(0.0, f64::max);
            for a in 0..k {
                m[a * k + a] += damping;
            }
            crate::linalg::invert(&m, k)?
        }
    };
    let rhs: Vec<f64> = active.iter().map(|&j| c[j] - l1 * f64::from(sign(beta[j]))).collect();
    Some((0..k).map(|a| (0..k).map(|b| inv[a * k + b] * rhs[b]).sum()).collect())
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// `G = X'X / n` and `c = X'y / n` for a row-major design with `p` columns.
pub fn gram(x: &[f64], y: &[f64], p: usize) -> (Vec<f64>, Vec<f64>) {
    let n = y.len() as f64;
    let mut g = vec![0.0; p * p];
    let mut c = vec![0.0; p];
    for (row, &yi) in x.chunks_exact(p).zip(y) {
        for j in 0..p {
            c[j] += row[j] * yi;
            for k in j..p {
                g[j * p + k] += row[j] * row[k];
            }
        }
    }
    for j in 0..p {
        for k in j..p {
            g[j * p + k] /= n;
            g[k * p + j] = g[j * p + k];
        }
        c[j] /= n;
    }
    (g, c)
}

/// Penalized least squares on a raw design (no standardization, no intercept).
pub fn elastic_net(x: &[f64], y: &[f64], p: usize, lambda: f64, alpha: f64) -> Result<CdSolution> {
    if x.len() != y.len() * p {
        return Err(domain!("design has {} cells, expected {}", x.len(), y.len() * p));
    }
    let (g, c) = gram(x, y, p);
    coordinate_descent(&g, &c, lambda, alpha, None)
}

/// Column means and population standard deviations of the training rows.
struct Standardizer {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[&Vec<f64>], p: usize) -> Self {
        let n = rows.len() as f64;
        let mut mean = vec![0.0; p];
        for r in rows {
            for j in 0..p {
                mean[j] += r[j];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut sd = vec![0.0; p];
        for r in rows {
            for j in 0..p {
                let d = r[j] - mean[j];
                sd[j] += d * d;
            }
        }
        sd.iter_mut().for_each(|s| *s = math::sqrt(*s / n));
        Self { mean, sd }
    }

    fn apply<'a>(&'a self, r: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        r.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { 0.0 })
    }
}

/// Standardized Gram system of a subset of rows, with the centred target.
struct Prepared {
    std: Standardizer,
    y_mean: f64,
    gram: Vec<f64>,
    c: Vec<f64>,
}

fn prepare(m: &FeatureMatrix, idx: &[usize]) -> Prepared {
    let p = m.columns.len();
    let rows: Vec<&Vec<f64>> = idx.iter().map(|&i| &m.rows[i]).collect();
    let std = Standardizer::fit(&rows, p);
    let y_mean = idx.iter().map(|&i| m.target[i]).sum::<f64>() / idx.len() as f64;
    let mut x = Vec::with_capacity(idx.len() * p);
    for r in &rows {
        x.extend(std.apply(r));
    }
    let y: Vec<f64> = idx.iter().map(|&i| m.target[i] - y_mean).collect();
    let (gram, c) = gram(&x, &y, p);
    Prepared { std, y_mean, gram, c }
}

impl Prepared {
    /// Geometric grid from the smallest penalty that zeroes every slope.
    fn lambda_grid(&self, alpha: f64, points: usize) -> Vec<f64> {
        let cmax = self.c.iter().fold(0.0f64, |a, v| a.max(math::abs(*v)));
        let top = cmax / alpha.max(1e-3);
        if top == 0.0 || points == 0 {
            return vec![0.0];
        }
        if points == 1 {
            return vec![top];
        }
        let step = math::ln(LAMBDA_RATIO) / (points - 1) as f64;
        (0..points).map(|i| top * math::exp(step * i as f64)).collect()
    }

    fn to_model(&self, kind: ModelKind, columns: &[String], beta: &[f64], lambda: f64, alpha: f64) -> Model {
        let coefficients: Vec<f64> = beta
            .iter()
            .zip(&self.std.sd)
            .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
            .collect();
        let intercept = self.y_mean - coefficients.iter().zip(&self.std.mean).map(|(b, m)| b * m).sum::<f64>();
        Model {
            kind,
            columns: columns.to_vec(),
            intercept,
            coefficients,
            lambda: Some(lambda),
            alpha: Some(alpha),
            dropped_delta: false,
            cv_skipped: 0,
        }
    }
}

/// Penalized fit at a fixed penalty on all rows of `train`.
pub fn fit_penalized_at(train: &FeatureMatrix, kind: ModelKind, lambda: f64, alpha: f64) -> Result<Model> {
    if train.is_empty() {
        return Err(domain!("empty training set"));
    }
    let all: Vec<usize> = (0..train.len()).collect();
    let prep = prepare(train, &all);
    let sol = coordinate_descent(&prep.gram, &prep.c, lambda, alpha, None)?;
    Ok(prep.to_model(kind, &train.columns, &sol.beta, lambda, alpha))
}

/// Penalized fit with the mixing value and penalty chosen by k-fold CV
/// (plain minimum of the mean squared error of the delta target).
pub fn fit_penalized(train: &FeatureMatrix, spec: &ModelSpec, seed: u64) -> Result<Model> {
    if !spec.kind.is_penalized() || spec.alphas.is_empty() {
        return Err(domain!("{} is not a penalized model", spec.kind.name()));
    }
    let n = train.len();
    if n < CV_FOLDS {
        return Err(domain!("need at least {} training rows for cross-validation", CV_FOLDS));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % CV_FOLDS;
    }
    let full = prepare(train, &order);
    let folds: Vec<(Prepared, Vec<usize>)> = (0..CV_FOLDS)
        .map(|f| {
            let fit_idx: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
            let held: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
            (prepare(train, &fit_idx), held)
        })
        .collect();
    // (cv mse, alpha index, lambda index) of every grid point whose fits all converged
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut skipped = 0usize;
    let grids: Vec<Vec<f64>> = spec.alphas.iter().map(|&a| full.lambda_grid(a, spec.lambda_points)).collect();
    for (ai, &alpha) in spec.alphas.iter().enumerate() {
        let grid = &grids[ai];
        let mut cv_sse = vec![0.0; grid.len()];
        let mut failed = vec![false; grid.len()];
        for (prep, held) in &folds {
            let mut warm: Option<Vec<f64>> = None;
            for (li, &lambda) in grid.iter().enumerate() {
                let sol = descend(&prep.gram, &prep.c, lambda, alpha, warm.as_deref())?;
                failed[li] |= !sol.converged;
                let model = prep.to_model(spec.kind, &train.columns, &sol.beta, lambda, alpha);
                for &i in held {
                    let pred = model.intercept
                        + train.rows[i].iter().zip(&model.coefficients).map(|(x, b)| x * b).sum::<f64>();
                    let e = train.target[i] - pred;
                    cv_sse[li] += e * e;
                }
                warm = Some(sol.beta);
            }
        }
        for li in 0..grid.len() {
            if failed[li] {
                skipped += 1;
            } else {
                candidates.push((cv_sse[li] / n as f64, ai, li));
            }
        }
    }
    // stable sort keeps grid order among ties, so the first minimum wins
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut last = None;
    for &(_, ai, li) in &candidates {
        let alpha = spec.alphas[ai];
        let mut warm: Option<Vec<f64>> = None;
        let mut sol = None;
        for &lambda in &grids[ai][..=li] {
            let d = descend(&full.gram, &full.c, lambda, alpha, warm.as_deref())?;
            warm = Some(d.beta.clone());
            sol = Some(d);
        }
        let sol = sol.expect("non-empty path");
        if sol.converged {
            let mut model = full.to_model(spec.kind, &train.columns, &sol.beta, grids[ai][li], alpha);
            model.cv_skipped = skipped;
            return Ok(model);
        }
        skipped += 1;
        last = Some(sol);
    }
    let (sweeps, max_change) = last.map_or((0, f64::NAN), |d| (d.sweeps, d.max_change));
    Err(crate::Error::Convergence { sweeps, max_change })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMeasures {
    /// `None` when the test levels have zero variance.
    pub r2: Option<f64>,
    pub rmse: f64,
    /// Root of the median squared error.
    pub medse: f64,
    pub mae: f64,
}

/// Error measures of predicted against observed values.
pub fn error_measures(actual: &[f64], predicted: &[f64]) -> Result<ErrorMeasures> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(domain!("need equal, non-empty prediction and target lengths"));
    }
    let n = actual.len() as f64;
    let sq: Vec<f64> = actual.iter().zip(predicted).map(|(a, p)| (a - p) * (a - p)).collect();
    let sse: f64 = sq.iter().sum();
    let mean = math::mean(actual);
    let sst: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    Ok(ErrorMeasures {
        r2: (sst > 0.0).then(|| 1.0 - sse / sst),
        rmse: math::sqrt(sse / n),
        medse: math::sqrt(math::median(&sq).expect("non-empty")),
        mae: actual.iter().zip(predicted).map(|(a, p)| math::abs(a - p)).sum::<f64>() / n,
    })
}

/// Errors of a model on the level scale of `test`.
pub fn evaluate(model: &Model, test: &FeatureMatrix) -> Result<ErrorMeasures> {
    if test.is_empty() {
        return Err(domain!("empty test set"));
    }
    error_measures(&test.level_target(), &model.predict_level(test)?)
}

pub fn fit_model(train: &FeatureMatrix, spec: &ModelSpec, seed: u64) -> Result<Model> {
    match spec.kind {
        ModelKind::Baseline => fit_baseline(train),
        ModelKind::Markov => fit_markov(train),
        _ => fit_penalized(train, spec, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub task: Task,
    pub model: ModelKind,
    pub coefficients: BTreeMap<String, f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub dropped_delta: bool,
    pub cv_skipped: usize,
    pub test_r2: Option<f64>,
    pub test_rmse: f64,
    pub test_medse: f64,
    pub test_mae: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// The 75 `(t1, t2)` pairs: `t1` in 5, 10, .., 25 and `t2` in `t1 + 1..=30`.
pub fn grid_tasks(kind: TargetKind) -> Vec<Task> {
    T1_VALUES
        .iter()
        .flat_map(|&t1| (t1 + 1..=MAX_AGE).map(move |t2| Task { kind, t1, t2 }))
        .collect()
}

/// Fits and evaluates one model on one matrix under a fixed split.
pub fn run_task(m: &FeatureMatrix, split: &EntitySplit, spec: &ModelSpec, seed: u64) -> Result<FitResult> {
    let (train, test) = split.apply(m);
    if train.len() < 2 || test.is_empty() {
        return Err(domain!("split leaves {} training and {} test rows", train.len(), test.len()));
    }
    let cv_seed = derive_seed(seed, &format!("cv:{}:{}:{}", spec.kind.name(), m.task.t1, m.task.t2));
    let model = fit_model(&train, spec, cv_seed)?;
    let e = evaluate(&model, &test)?;
    Ok(FitResult {
        task: m.task,
        model: spec.kind,
        coefficients: model.named_coefficients(),
        lambda: model.lambda,
        alpha: model.alpha,
        dropped_delta: model.dropped_delta,
        cv_skipped: model.cv_skipped,
        test_r2: e.r2,
        test_rmse: e.rmse,
        test_medse: e.medse,
        test_mae: e.mae,
        n_train: train.len(),
        n_test: test.len(),
    })
}

/// Split shared by every task of a target kind.
pub fn task_split(ctx: &FeatureContext, kind: TargetKind, seed: u64) -> Result<EntitySplit> {
    let c = ctx.corpus();
    let ids: Vec<&str> = ctx
        .entities(kind)
        .into_iter()
        .map(|i| {
            if kind.entity_is_publication() {
                c.publications()[i].pub_id.as_str()
            } else {
                c.scholars()[i].scholar_id.as_str()
            }
        })
        .collect();
    EntitySplit::new(&ids, TRAIN_RATIO, derive_seed(seed, &format!("split:{:?}", kind)))
}

/// Runs every model over the 75-task grid, sequentially.
pub fn run_grid(
    corpus: &Corpus,
    bench: &BenchmarkSpec,
    kind: TargetKind,
    models: &[ModelKind],
    seed: u64,
) -> Result<Vec<FitResult>> {
    let ctx = FeatureContext::from_corpus(corpus, bench)?;
    let split = task_split(&ctx, kind, seed)?;
    let mut out = Vec::new();
    for &t1 in &T1_VALUES {
        let entities = ctx.entities(kind);
        let rows = entities
            .iter()
            .map(|&i| ctx.row(kind, i, t1))
            .collect::<Result<Vec<_>>>()?;
        for t2 in t1 + 1..=MAX_AGE {
            let m = ctx.matrix_from_rows(Task { kind, t1, t2 }, &entities, rows.clone())?;
            for &mk in models {
                out.push(run_task(&m, &split, &ModelSpec::new(mk), seed)?);
            }
        }
    }
    Ok(out)
}
