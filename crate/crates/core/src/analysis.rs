//! Correlation, regression, agreement and rank tests over percentile series.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{degenerate, domain, Result};
use crate::percentile::{doubled_midranks, PercentileMap, PercentileSeries};
use crate::special::{normal_sf, student_t_two_sided_p};
use crate::{math, Age};

fn check_pairs(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(domain!("length mismatch: {} vs {}", x.len(), y.len()));
    }
    if x.len() < min {
        return Err(domain!("need at least {} pairs, got {}", min, x.len()));
    }
    Ok(())
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pairs(x, y, 2)?;
    let (mx, my) = (math::mean(x), math::mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(degenerate!("zero variance in correlation input"));
    }
    Ok((sxy / math::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub t1: Age,
    pub t2: Age,
    pub value: f64,
    pub n: usize,
}

/// Statistics indexed by age pairs with `t1 < t2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgePairMatrix {
    pub t1_values: Vec<Age>,
    pub t2_values: Vec<Age>,
    pub cells: Vec<MatrixCell>,
}

impl AgePairMatrix {
    pub fn get(&self, t1: Age, t2: Age) -> Option<f64> {
        self.cells.iter().find(|c| c.t1 == t1 && c.t2 == t2).map(|c| c.value)
    }
}

/// Pearson correlation of value(t1) against value(t2) across the entities
/// that have values at every requested age.
pub fn stability_matrix(series: &[PercentileSeries], t1_list: &[Age], t2_list: &[Age]) -> Result<AgePairMatrix> {
    let ages: Vec<Age> = t1_list.iter().chain(t2_list).copied().collect();
    let kept: Vec<&PercentileSeries> = series.iter().filter(|s| s.covers(ages.iter().copied())).collect();
    if kept.len() < 2 {
        return Err(degenerate!("{} entities cover every requested age; need 2", kept.len()));
    }
    let column = |t: Age| -> Vec<f64> { kept.iter().map(|s| s.values[&t]).collect() };
    let mut cells = Vec::new();
    for &t1 in t1_list {
        let x = column(t1);
        for &t2 in t2_list.iter().filter(|&&t2| t2 > t1) {
            cells.push(MatrixCell {
                t1,
                t2,
                value: pearson(&x, &column(t2))?,
                n: kept.len(),
            });
        }
    }
    Ok(AgePairMatrix {
        t1_values: t1_list.to_vec(),
        t2_values: t2_list.to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r2: f64,
    pub n: usize,
    /// Two-sided p-value of the slope t-test.
    pub slope_p: f64,
}

/// Simple linear regression of `y` on `x` with an intercept.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    check_pairs(x, y, 3)?;
    let n = x.len();
    let (mx, my) = (math::mean(x), math::mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(degenerate!("constant regressor"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_se = math::sqrt(sse / (n - 2) as f64 / sxx);
    let r2 = if syy == 0.0 { 0.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let slope_p = if slope_se > 0.0 {
        student_t_two_sided_p(slope / slope_se, (n - 2) as f64)
    } else if slope == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(OlsFit {
        slope,
        intercept,
        slope_se,
        r2,
        n,
        slope_p,
    })
}

/// Quartile class 1..=4 of a percentile.
pub fn classify_percentile(v: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&v) {
        return Err(domain!("percentile {} outside [0, 1]", v));
    }
    Ok(match v {
        v if v < 0.25 => 1,
        v if v < 0.5 => 2,
        v if v < 0.75 => 3,
        _ => 4,
    })
}

/// Class counts for one pair of indicators; `counts[a - 1][b - 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTable {
    pub first: usize,
    pub second: usize,
    pub counts: [[u64; 4]; 4],
}

impl PairTable {
    pub fn agreement(&self) -> f64 {
        let total: u64 = self.counts.iter().flatten().sum();
        let diag: u64 = (0..4).map(|i| self.counts[i][i]).sum();
        diag as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    /// Share of common entities whose classes coincide across every series.
    pub fraction: f64,
    pub n: usize,
    /// One table per pair of series, in input order.
    pub tables: Vec<PairTable>,
}

/// Class agreement of two or more percentile maps over their common entities.
pub fn agreement(series: &[&PercentileMap]) -> Result<Agreement> {
    if series.len() < 2 {
        return Err(domain!("agreement needs at least two series"));
    }
    let common: Vec<&String> = series[0]
        .keys()
        .filter(|k| series[1..].iter().all(|s| s.contains_key(*k)))
        .collect();
    if common.is_empty() {
        return Err(degenerate!("series share no entities"));
    }
    let mut tables = Vec::new();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            tables.push(PairTable {
                first: i,
                second: j,
                counts: [[0; 4]; 4],
            });
        }
    }
    let mut agree = 0usize;
    for id in &common {
        let classes = series
            .iter()
            .map(|s| classify_percentile(s[*id]))
            .collect::<Result<Vec<u8>>>()?;
        if classes.iter().all(|&c| c == classes[0]) {
            agree += 1;
        }
        for t in &mut tables {
            t.counts[usize::from(classes[t.first]) - 1][usize::from(classes[t.second]) - 1] += 1;
        }
    }
    Ok(Agreement {
        fraction: agree as f64 / common.len() as f64,
        n: common.len(),
        tables,
    })
}

/// Largest sample (after dropping zero differences) that uses the exact null distribution.
pub const WILCOXON_EXACT_MAX: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub exact: bool,
    /// Set when every difference is zero; `p_value` is then 1.
    pub degenerate: bool,
}

/// Null distribution of twice the positive-rank sum: entry `k` counts the
/// sign assignments whose doubled positive-rank sum is `k`.
pub fn signed_rank_null_counts(doubled_ranks: &[u64]) -> Vec<u64> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled_ranks {
        let r = r as usize;
        for k in (0..=reach).rev() {
            let c = counts[k];
            if c != 0 {
                counts[k + r] += c;
            }
        }
        reach += r;
    }
    counts
}

/// Two-sided paired signed-rank test of `x - y`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    check_pairs(x, y, 1)?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(domain!("non-finite difference"));
    }
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            exact: true,
            degenerate: true,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| math::abs(*v)).collect();
    let ranks = doubled_midranks(&abs)?;
    let w2: u64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let statistic = w2 as f64 / 2.0;
    let exact = n <= WILCOXON_EXACT_MAX;
    let p_value = if exact {
        let counts = signed_rank_null_counts(&ranks);
        let all = counts.iter().map(|&c| c as f64).sum::<f64>();
        let lower = counts[..=w2 as usize].iter().map(|&c| c as f64).sum::<f64>() / all;
        let upper = counts[w2 as usize..].iter().map(|&c| c as f64).sum::<f64>() / all;
        (2.0 * lower.min(upper)).min(1.0)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut sorted = ranks.clone();
        sorted.sort_unstable();
        let mut i = 0;
        while i < sorted.len() {
            let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
            let t = j as f64;
            tie_term += t * t * t - t;
            i += j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        if var <= 0.0 {
            1.0
        } else {
            let z = ((statistic - mean).abs() - 0.5).max(0.0) / math::sqrt(var);
            (2.0 * normal_sf(z)).min(1.0)
        }
    };
    Ok(WilcoxonResult {
        statistic,
        p_value,
        n,
        exact,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinnedPoint {
    /// Bin edges on the late-value axis; both 0 for the zero bin.
    pub lower: f64,
    pub upper: f64,
    pub mean_early: f64,
    pub mean_late: f64,
    pub count: usize,
}

/// Bins entities by their late value (zeros first, then `n_bins` equal log
/// intervals over the positive range) and averages both coordinates per bin.
pub fn log_binned_average(
    early: &BTreeMap<String, f64>,
    late: &BTreeMap<String, f64>,
    n_bins: usize,
) -> Result<Vec<BinnedPoint>> {
    if n_bins < 1 {
        return Err(domain!("need at least one bin"));
    }
    let pairs: Vec<(f64, f64)> = late
        .iter()
        .filter_map(|(k, &l)| early.get(k).map(|&e| (e, l)))
        .collect();
    if let Some((_, l)) = pairs.iter().find(|(_, l)| *l < 0.0 || !l.is_finite()) {
        return Err(domain!("late value {} cannot be log-binned", l));
    }
    let positive = pairs.iter().map(|p| p.1).filter(|&l| l > 0.0);
    let lo = positive.clone().fold(f64::INFINITY, f64::min);
    let hi = positive.fold(0.0, f64::max);
    let (llo, lhi) = (math::ln(lo), math::ln(hi));
    let width = (lhi - llo) / n_bins as f64;
    // slot 0 holds zeros, slot b + 1 the b-th log bin
    let mut sums = vec![(0.0, 0.0, 0usize); n_bins + 1];
    for &(e, l) in &pairs {
        let slot = if l == 0.0 {
            0
        } else if width == 0.0 {
            1
        } else {
            1 + (((math::ln(l) - llo) / width) as usize).min(n_bins - 1)
        };
        sums[slot].0 += e;
        sums[slot].1 += l;
        sums[slot].2 += 1;
    }
    Ok(sums
        .iter()
        .enumerate()
        .filter(|(_, s)| s.2 > 0)
        .map(|(slot, &(se, sl, k))| {
            let (lower, upper) = match slot {
                0 => (0.0, 0.0),
                _ if width == 0.0 => (lo, hi),
                _ => (
                    math::exp(llo + width * (slot - 1) as f64),
                    math::exp(llo + width * slot as f64),
                ),
            };
            BinnedPoint {
                lower,
                upper,
                mean_early: se / k as f64,
                mean_late: sl / k as f64,
                count: k,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    /// Regression of the per-cohort median on the cohort year.
    pub fit: OlsFit,
    pub medians: BTreeMap<i32, f64>,
    /// Slope differs from zero at the 5% level.
    pub significant: bool,
}

/// Tests for a linear trend in per-cohort medians.
pub fn trend_test(cohorts: &BTreeMap<i32, Vec<f64>>) -> Result<TrendTest> {
    let medians: BTreeMap<i32, f64> = cohorts
        .iter()
        .filter_map(|(y, v)| math::median(v).map(|m| (*y, m)))
        .collect();
    let x: Vec<f64> = medians.keys().map(|&y| f64::from(y)).collect();
    let y: Vec<f64> = medians.values().copied().collect();
    let fit = ols_fit(&x, &y)?;
    Ok(TrendTest {
        significant: fit.slope_p < 0.05,
        fit,
        medians,
    })
}
