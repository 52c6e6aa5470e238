//! ADF and KPSS stationarity tests with drift and no trend.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{degenerate, domain, eligibility, Result};
use crate::linalg::least_squares;
use crate::percentile::PercentileSeries;
use crate::{math, Age};

/// Shortest series either test accepts.
pub const MIN_LENGTH: usize = 10;
/// 5% critical value of the Dickey-Fuller statistic with drift.
pub const ADF_CRITICAL_5PCT: f64 = -2.89;
/// 5% critical value of the level KPSS statistic.
pub const KPSS_CRITICAL_5PCT: f64 = 0.463;
pub const DEFAULT_ADF_LAGS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestKind {
    Adf,
    Kpss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationarityResult {
    pub test: TestKind,
    pub statistic: f64,
    pub critical_5pct: f64,
    pub reject_null: bool,
    pub series_length: usize,
    /// Set for constant input, where the statistic is 0 by convention.
    pub degenerate: bool,
}

/// `value(t2) - value(t1)` for every `t2` in `t2s`.
pub fn difference(series: &PercentileSeries, t1: Age, t2s: &[Age]) -> Result<BTreeMap<Age, f64>> {
    let base = series
        .get(t1)
        .ok_or_else(|| eligibility!("series {} has no value at age {}", series.entity_id, t1))?;
    t2s.iter()
        .map(|&t2| {
            if t2 <= t1 {
                return Err(domain!("t2 ({}) must exceed t1 ({})", t2, t1));
            }
            let v = series
                .get(t2)
                .ok_or_else(|| eligibility!("series {} has no value at age {}", series.entity_id, t2))?;
            Ok((t2, v - base))
        })
        .collect()
}

/// `x[i] - x[i - 1]`.
pub fn first_difference(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn check_length(x: &[f64]) -> Result<()> {
    if x.len() < MIN_LENGTH {
        return Err(domain!("series of length {} is shorter than {}", x.len(), MIN_LENGTH));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(domain!("series contains non-finite values"));
    }
    Ok(())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Augmented Dickey-Fuller test with the default lag order.
pub fn adf_test(x: &[f64]) -> Result<StationarityResult> {
    adf_test_with_lags(x, DEFAULT_ADF_LAGS)
}

/// Regresses `Δy_t` on a constant, `y_{t-1}` and `lags` lagged differences;
/// the statistic is the t-ratio of the `y_{t-1}` coefficient.
pub fn adf_test_with_lags(x: &[f64], lags: usize) -> Result<StationarityResult> {
    check_length(x)?;
    if is_constant(x) {
        return Err(degenerate!("constant series"));
    }
    let dx = first_difference(x);
    let k = 2 + lags;
    let rows = dx.len().saturating_sub(lags);
    if rows <= k {
        return Err(domain!("{} lags leave too few observations", lags));
    }
    let mut design = Vec::with_capacity(rows * k);
    let mut y = Vec::with_capacity(rows);
    // dx[i] = x[i + 1] - x[i]; the lagged level is centred, which leaves its
    // coefficient unchanged under the intercept and keeps the system well scaled
    let centre = math::mean(&x[lags..dx.len()]);
    for i in lags..dx.len() {
        design.push(1.0);
        design.push(x[i] - centre);
        for l in 1..=lags {
            design.push(dx[i - l]);
        }
        y.push(dx[i]);
    }
    let fit = least_squares(&design, &y, k).ok_or_else(|| degenerate!("singular Dickey-Fuller regression"))?;
    let se = fit.se[1];
    if !(se > 0.0) {
        return Err(degenerate!("Dickey-Fuller regression fits exactly"));
    }
    let statistic = fit.coef[1] / se;
    Ok(StationarityResult {
        test: TestKind::Adf,
        statistic,
        critical_5pct: ADF_CRITICAL_5PCT,
        reject_null: statistic < ADF_CRITICAL_5PCT,
        series_length: x.len(),
        degenerate: false,
    })
}

/// Newey-West bandwidth `floor(4 (n / 100)^(1/4))`.
pub fn kpss_bandwidth(n: usize) -> usize {
    math::floor(4.0 * math::powf(n as f64 / 100.0, 0.25)) as usize
}

/// Level-stationarity KPSS test with a Bartlett-kernel long-run variance.
pub fn kpss_test(x: &[f64]) -> Result<StationarityResult> {
    check_length(x)?;
    let n = x.len();
    if is_constant(x) {
        return Ok(StationarityResult {
            test: TestKind::Kpss,
            statistic: 0.0,
            critical_5pct: KPSS_CRITICAL_5PCT,
            reject_null: false,
            series_length: n,
            degenerate: true,
        });
    }
    let m = math::mean(x);
    let e: Vec<f64> = x.iter().map(|v| v - m).collect();
    let nf = n as f64;
    let mut partial = 0.0;
    let mut eta = 0.0;
    for v in &e {
        partial += v;
        eta += partial * partial;
    }
    let bandwidth = kpss_bandwidth(n);
    let mut lrv = e.iter().map(|v| v * v).sum::<f64>() / nf;
    for l in 1..=bandwidth.min(n - 1) {
        let w = 1.0 - l as f64 / (bandwidth as f64 + 1.0);
        let gamma: f64 = e[l..].iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() / nf;
        lrv += 2.0 * w * gamma;
    }
    let statistic = eta / (nf * nf * lrv);
    Ok(StationarityResult {
        test: TestKind::Kpss,
        statistic,
        critical_5pct: KPSS_CRITICAL_5PCT,
        reject_null: statistic > KPSS_CRITICAL_5PCT,
        series_length: n,
        degenerate: false,
    })
}
