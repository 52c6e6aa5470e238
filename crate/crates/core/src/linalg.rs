//! Small dense least-squares helpers (a handful of regressors at most).

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};

/// Inverts a symmetric positive-definite `k × k` matrix (row-major) by
/// Gauss-Jordan elimination with partial pivoting. Returns `None` when a pivot
/// falls below `1e-10` of the largest original diagonal entry.
pub(crate) fn invert(a: &[f64], k: usize) -> Option<Vec<f64>> {
    let scale = (0..k).map(|i| abs(a[i * k + i])).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    let tol = 1e-10 * scale;
    let mut m = a.to_vec();
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        inv[i * k + i] = 1.0;
    }
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&r, &s| abs(m[r * k + col]).total_cmp(&abs(m[s * k + col])))
            .unwrap_or(col);
        if abs(m[pivot_row * k + col]) <= tol {
            return None;
        }
        if pivot_row != col {
            for j in 0..k {
                m.swap(pivot_row * k + j, col * k + j);
                inv.swap(pivot_row * k + j, col * k + j);
            }
        }
        let p = m[col * k + col];
        for j in 0..k {
            m[col * k + j] /= p;
            inv[col * k + j] /= p;
        }
        for r in 0..k {
            if r == col {
                continue;
            }
            let f = m[r * k + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..k {
                m[r * k + j] -= f * m[col * k + j];
                inv[r * k + j] -= f * inv[col * k + j];
            }
        }
    }
    Some(inv)
}

pub(crate) struct LeastSquares {
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    #[allow(dead_code)]
    pub sse: f64,
}

/// Ordinary least squares of `y` on the columns of `x` (row-major, `k` columns,
/// no implicit intercept). Standard errors use the homoskedastic estimate
/// `SSE / (n - k)`; they are `NaN` when `n <= k`.
pub(crate) fn least_squares(x: &[f64], y: &[f64], k: usize) -> Option<LeastSquares> {
    let n = y.len();
    debug_assert_eq!(x.len(), n * k);
    let mut xtx = vec![0.0; k * k];
    let mut xty = vec![0.0; k];
    for (row, &yi) in x.chunks_exact(k).zip(y) {
        for i in 0..k {
            xty[i] += row[i] * yi;
            for j in i..k {
                xtx[i * k + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            xtx[i * k + j] = xtx[j * k + i];
        }
    }
    let inv = invert(&xtx, k)?;
    let coef: Vec<f64> = (0..k)
        .map(|i| (0..k).map(|j| inv[i * k + j] * xty[j]).sum())
        .collect();
    let sse: f64 = x
        .chunks_exact(k)
        .zip(y)
        .map(|(row, &yi)| {
            let fit: f64 = row.iter().zip(&coef).map(|(a, b)| a * b).sum();
            (yi - fit) * (yi - fit)
        })
        .sum();
    let sigma2 = if n > k { sse / (n - k) as f64 } else { f64::NAN };
    let se = (0..k).map(|i| sqrt(sigma2 * inv[i * k + i])).collect();
    Some(LeastSquares { coef, se, sse })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_known_matrix() {
        let a = [4.0, 7.0, 2.0, 6.0];
        let inv = invert(&a, 2).unwrap();
        let expect = [0.6, -0.7, -0.2, 0.4];
        for (x, e) in inv.iter().zip(expect) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2).is_none());
    }

    #[test]
    fn exact_fit_has_zero_sse() {
        // y = 1 + 2x
        let x = [1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = least_squares(&x, &y, 2).unwrap();
        assert!((fit.coef[0] - 1.0).abs() < 1e-12);
        assert!((fit.coef[1] - 2.0).abs() < 1e-12);
        assert!(fit.sse < 1e-20);
    }
}
