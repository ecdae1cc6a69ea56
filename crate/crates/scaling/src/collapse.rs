//! Finite-size collapse of two curves in `(p - p_c) N^{1/ν}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ScalingCurve;
use crate::spline::{bisect, linear_interp, CubicSpline};

/// Objective ratio defining the confidence intervals.
pub const CONFIDENCE_RATIO: f64 = 1.3;
/// Floor on the combined variance of one residual, so exact data stays finite.
const VARIANCE_FLOOR: f64 = 1e-30;
/// Scan steps per grid spacing when bracketing the confidence endpoints.
const INTERVAL_SCAN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    pub p_c: f64,
    pub nu: f64,
    pub objective: f64,
    /// Points where `O(p_c, ν*) = 1.3 O*`; `None` when the grid edge is hit first.
    pub p_c_interval: (Option<f64>, Option<f64>),
    /// Points where `O(p_c*, ν) = 1.3 O*`.
    pub nu_interval: (Option<f64>, Option<f64>),
    /// The grid minimum sits on the grid boundary; widen the grid.
    pub boundary_warning: bool,
}

struct Rescaled {
    x: Vec<f64>,
    y: Vec<f64>,
    e: Vec<f64>,
}

fn rescale(curve: &ScalingCurve, p_c: f64, nu: f64) -> Rescaled {
    let factor = (curve.n_qubits as f64).powf(1.0 / nu);
    let pts = curve.points();
    Rescaled {
        x: pts.iter().map(|pt| (pt.p - p_c) * factor).collect(),
        y: pts.iter().map(|pt| pt.mean).collect(),
        e: pts.iter().map(|pt| pt.stderr).collect(),
    }
}

/// Sum of error-normalized squared deviations of `a`'s points from the spline
/// through `b`, over the points of `a` inside `b`'s range.
fn one_sided(a: &Rescaled, b: &Rescaled, spline: &CubicSpline) -> (f64, usize) {
    let (lo, hi) = spline.domain();
    let mut total = 0.0;
    let mut count = 0;
    for i in 0..a.x.len() {
        let x = a.x[i];
        if x < lo || x > hi {
            continue;
        }
        let var = (a.e[i].powi(2) + linear_interp(&b.x, &b.e, x).powi(2)).max(VARIANCE_FLOOR);
        total += (a.y[i] - spline.eval(x)).powi(2) / var;
        count += 1;
    }
    (total, count)
}

/// Mean squared deviation of each curve from the spline of the other,
/// normalized by the combined standard errors and pooled over both
/// directions. Infinite when fewer than two points overlap.
pub fn objective(curve1: &ScalingCurve, curve2: &ScalingCurve, p_c: f64, nu: f64) -> f64 {
    if curve1.points().len() < 2 || curve2.points().len() < 2 || !(nu > 0.0) {
        return f64::INFINITY;
    }
    let a = rescale(curve1, p_c, nu);
    let b = rescale(curve2, p_c, nu);
    let (Ok(sa), Ok(sb)) = (CubicSpline::natural(&a.x, &a.y), CubicSpline::natural(&b.x, &b.y)) else {
        return f64::INFINITY;
    };
    let (t1, c1) = one_sided(&a, &b, &sb);
    let (t2, c2) = one_sided(&b, &a, &sa);
    if c1 + c2 < 2 {
        return f64::INFINITY;
    }
    (t1 + t2) / (c1 + c2) as f64
}

/// Vertex of the parabola through three equally spaced samples, if convex.
fn parabola_vertex(x: [f64; 3], f: [f64; 3]) -> Option<f64> {
    let h = x[1] - x[0];
    let curvature = f[0] - 2.0 * f[1] + f[2];
    (curvature > 0.0 && f.iter().all(|v| v.is_finite())).then(|| x[1] + 0.5 * h * (f[0] - f[2]) / curvature)
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.len() < 3 {
        return Err(Error::Config(format!("{name} grid needs at least 3 values")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

/// Walks from `center` towards `edge` until `f` crosses `threshold`, then bisects.
fn threshold_point(f: &impl Fn(f64) -> f64, center: f64, edge: f64, step: f64, threshold: f64) -> Option<f64> {
    let dir = (edge - center).signum();
    let mut prev = center;
    loop {
        let next = if (edge - prev).abs() <= step { edge } else { prev + dir * step };
        if f(next) >= threshold {
            return Some(bisect(|t| f(t) - threshold, prev.min(next), prev.max(next)));
        }
        if next == edge {
            return None;
        }
        prev = next;
    }
}

/// Minimizes the objective over the grid, refines the minimum by local
/// quadratic interpolation and reports `O = 1.3 O*` intervals in each
/// direction.
pub fn collapse(curve1: &ScalingCurve, curve2: &ScalingCurve, p_c_grid: &[f64], nu_grid: &[f64]) -> Result<Collapse> {
    check_grid("p_c", p_c_grid)?;
    check_grid("nu", nu_grid)?;
    if nu_grid[0] <= 0.0 {
        return Err(Error::Config("nu grid must be positive".into()));
    }
    let cells: Vec<(usize, usize)> =
        (0..p_c_grid.len()).flat_map(|i| (0..nu_grid.len()).map(move |j| (i, j))).collect();
    let values: Vec<f64> =
        cells.par_iter().map(|&(i, j)| objective(curve1, curve2, p_c_grid[i], nu_grid[j])).collect();
    let at = |i: usize, j: usize| values[i * nu_grid.len() + j];
    let (best, _) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Config("collapse objective is undefined on the whole grid".into()))?;
    let (bi, bj) = cells[best];
    let boundary_warning = bi == 0 || bj == 0 || bi + 1 == p_c_grid.len() || bj + 1 == nu_grid.len();

    let mut p_c = p_c_grid[bi];
    let mut nu = nu_grid[bj];
    if !boundary_warning {
        let pc_vertex = parabola_vertex(
            [p_c_grid[bi - 1], p_c_grid[bi], p_c_grid[bi + 1]],
            [at(bi - 1, bj), at(bi, bj), at(bi + 1, bj)],
        );
        let nu_vertex = parabola_vertex(
            [nu_grid[bj - 1], nu_grid[bj], nu_grid[bj + 1]],
            [at(bi, bj - 1), at(bi, bj), at(bi, bj + 1)],
        );
        let refined_pc = pc_vertex.unwrap_or(p_c).clamp(p_c_grid[bi - 1], p_c_grid[bi + 1]);
        let refined_nu = nu_vertex.unwrap_or(nu).clamp(nu_grid[bj - 1], nu_grid[bj + 1]);
        if objective(curve1, curve2, refined_pc, refined_nu) <= at(bi, bj) {
            p_c = refined_pc;
            nu = refined_nu;
        }
    }
    let o_star = objective(curve1, curve2, p_c, nu);
    let threshold = CONFIDENCE_RATIO * o_star;

    let pc_step = (p_c_grid[1] - p_c_grid[0]) / INTERVAL_SCAN as f64;
    let nu_step = (nu_grid[1] - nu_grid[0]) / INTERVAL_SCAN as f64;
    let along_pc = |t: f64| objective(curve1, curve2, t, nu);
    let along_nu = |t: f64| objective(curve1, curve2, p_c, t);
    let (pc_first, pc_last) = (p_c_grid[0], p_c_grid[p_c_grid.len() - 1]);
    let (nu_first, nu_last) = (nu_grid[0], nu_grid[nu_grid.len() - 1]);
    Ok(Collapse {
        p_c,
        nu,
        objective: o_star,
        p_c_interval: (
            threshold_point(&along_pc, p_c, pc_first, pc_step, threshold),
            threshold_point(&along_pc, p_c, pc_last, pc_step, threshold),
        ),
        nu_interval: (
            threshold_point(&along_nu, nu, nu_first, nu_step, threshold),
            threshold_point(&along_nu, nu, nu_last, nu_step, threshold),
        ),
        boundary_warning,
    })
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
