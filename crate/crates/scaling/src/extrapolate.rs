//! Large-size extrapolations: linear in `(N₁N₂)⁻¹` for pair estimates and
//! `C - A e^{b/N}` for decay exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::weighted_line;

/// Pair estimate `(N₁, N₂, value)`.
pub type PairValue = (usize, usize, f64);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairExtrapolation {
    /// Value at `(N₁N₂)⁻¹ = 0`.
    pub intercept: f64,
    pub slope: f64,
    pub pairs_used: usize,
}

/// Equal-weight straight line in `(N₁N₂)⁻¹`; with three or more pairs the
/// smallest pair (largest abscissa) is left out.
pub fn extrapolate_pairs(values: &[PairValue]) -> Result<PairExtrapolation> {
    if values.len() < 2 {
        return Err(Error::ExtrapolationUnavailable(format!("{} size pairs, need at least 2", values.len())));
    }
    let mut pts: Vec<(f64, f64)> = values.iter().map(|&(a, b, v)| (1.0 / (a as f64 * b as f64), v)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() >= 3 {
        pts.pop();
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (intercept, slope, _, _) = weighted_line(&x, &y, &vec![1.0; x.len()])
        .map_err(|e| Error::ExtrapolationUnavailable(e.to_string()))?;
    Ok(PairExtrapolation { intercept, slope, pairs_used: x.len() })
}

/// Smallest size used by the exponent extrapolation when enough sizes reach it.
pub const EXPONENT_MIN_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentExtrapolation {
    /// Large-`N` limit.
    pub c: f64,
    pub a: f64,
    pub b: f64,
    pub ssr: f64,
    pub sizes_used: usize,
}

fn design(sizes: &[f64], b: f64) -> Vec<f64> {
    sizes.iter().map(|n| (b / n).exp()).collect()
}

/// Best `(C, A)` for fixed `b` by linear least squares on `α = C - A e^{b/N}`.
fn linear_part(sizes: &[f64], alphas: &[f64], b: f64) -> Option<(f64, f64, f64)> {
    let e = design(sizes, b);
    let m = sizes.len() as f64;
    let (se, sa) = (e.iter().sum::<f64>() / m, alphas.iter().sum::<f64>() / m);
    let see: f64 = e.iter().map(|v| (v - se).powi(2)).sum();
    let sea: f64 = e.iter().zip(alphas).map(|(v, a)| (v - se) * (a - sa)).sum();
    let slope = if see > 0.0 { sea / see } else { 0.0 };
    let (c, a) = (sa - slope * se, -slope);
    let ssr = e.iter().zip(alphas).map(|(v, al)| (al - c + a * v).powi(2)).sum();
    (c.is_finite() && a.is_finite()).then_some((c, a, ssr))
}

/// Fits `α(N) = C - A e^{b/N}`; sizes below [`EXPONENT_MIN_SIZE`] are dropped
/// when at least three sizes reach it.
///
/// `b` is located by a scan plus golden-section search on the profile
/// residual, and all three parameters are then polished by Gauss-Newton.
pub fn extrapolate_exponent(alphas: &[(usize, f64)]) -> Result<ExponentExtrapolation> {
    let mut data: Vec<(usize, f64)> = alphas.to_vec();
    data.sort_by_key(|d| d.0);
    if data.iter().filter(|d| d.0 >= EXPONENT_MIN_SIZE).count() >= 3 {
        data.retain(|d| d.0 >= EXPONENT_MIN_SIZE);
    }
    if data.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, found: data.len() });
    }
    let sizes: Vec<f64> = data.iter().map(|d| d.0 as f64).collect();
    let values: Vec<f64> = data.iter().map(|d| d.1).collect();
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);

    // constant data: any b works with A = 0
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.iter().all(|v| (v - mean).abs() <= 1e-14 * scale) {
        return Ok(ExponentExtrapolation { c: mean, a: 0.0, b: 0.0, ssr: 0.0, sizes_used: data.len() });
    }

    let n_min = sizes[0];
    let profile = |b: f64| linear_part(&sizes, &values, b).map_or(f64::INFINITY, |r| r.2);
    // e^{b/N} overflows near b/N ≈ 700; stay well inside
    let b_max = 40.0 * n_min;
    let scan: Vec<f64> = (0..=4000).map(|i| -b_max + 2.0 * b_max * i as f64 / 4000.0).collect();
    let (k, _) = scan
        .iter()
        .map(|&b| profile(b))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty scan");
    let (mut lo, mut hi) = (scan[k.saturating_sub(1)], scan[(k + 1).min(scan.len() - 1)]);
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - golden * (hi - lo);
        let m2 = lo + golden * (hi - lo);
        if profile(m1) <= profile(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mut b = 0.5 * (lo + hi);
    let (mut c, mut a, mut ssr) =
        linear_part(&sizes, &values, b).ok_or_else(|| Error::ExtrapolationFailed { reason: "profile undefined".into(), ssr: f64::INFINITY })?;

    // Gauss-Newton on (C, A, b)
    for _ in 0..50 {
        let e = design(&sizes, b);
        let r: Vec<f64> = values.iter().zip(&e).map(|(al, v)| al - (c - a * v)).collect();
        // columns ∂model/∂(C, A, b) = (1, -e, -A e / N)
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for i in 0..sizes.len() {
            let row = [1.0, -e[i], -a * e[i] / sizes[i]];
            for p in 0..3 {
                jtr[p] += row[p] * r[i];
                for q in 0..3 {
                    jtj[p][q] += row[p] * row[q];
                }
            }
        }
        let Some(delta) = solve3(jtj, jtr) else { break };
        let (c2, a2, b2) = (c + delta[0], a + delta[1], b + delta[2]);
        let e2 = design(&sizes, b2);
        let ssr2: f64 = values.iter().zip(&e2).map(|(al, v)| (al - (c2 - a2 * v)).powi(2)).sum();
        if !(ssr2 <= ssr) {
            break;
        }
        let done = (ssr - ssr2) <= 1e-30 * scale * scale;
        (c, a, b, ssr) = (c2, a2, b2, ssr2);
        if done {
            break;
        }
    }
    if !c.is_finite() || !a.is_finite() || !b.is_finite() {
        return Err(Error::ExtrapolationFailed { reason: "parameters diverged".into(), ssr });
    }
    if (b.abs() - b_max).abs() < 1e-9 * b_max || b.abs() > b_max {
        return Err(Error::ExtrapolationFailed { reason: format!("b = {b} ran to the search boundary"), ssr });
    }
    Ok(ExponentExtrapolation { c, a, b, ssr, sizes_used: data.len() })
}

/// Solves a symmetric 3×3 system by Gaussian elimination with pivoting.
fn solve3(m: [[f64; 3]; 3], r: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [[0.0; 4]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3] = r[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..4 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let out = [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]];
    out.iter().all(|v| v.is_finite()).then_some(out)
}
