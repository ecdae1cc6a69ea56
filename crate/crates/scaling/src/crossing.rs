//! Crossing point of two finite-size curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ScalingCurve;
use crate::spline::{bisect, linear_interp, CubicSpline};

/// Spline-difference samples per knot interval when locating sign changes.
const SPLINE_SCAN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Crossing of the cubic-spline interpolants.
    pub p_c: f64,
    /// Systematic plus statistical error.
    pub p_c_err: f64,
    pub p_linear: f64,
    /// `|spline - linear|`.
    pub systematic: f64,
    /// Largest shift of the linear crossing under ±stderr moves of the
    /// four bracketing points.
    pub statistical: f64,
}

fn columns(curve: &ScalingCurve) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let pts = curve.points();
    (
        pts.iter().map(|p| p.p).collect(),
        pts.iter().map(|p| p.mean).collect(),
        pts.iter().map(|p| p.stderr).collect(),
    )
}

/// Root of the line through `(x0, a0), (x1, a1)` minus the line through
/// `(y0, b0), (y1, b1)`; `None` for parallel lines.
fn line_crossing(a: [(f64, f64); 2], b: [(f64, f64); 2]) -> Option<f64> {
    let sa = (a[1].1 - a[0].1) / (a[1].0 - a[0].0);
    let sb = (b[1].1 - b[0].1) / (b[1].0 - b[0].0);
    let ia = a[0].1 - sa * a[0].0;
    let ib = b[0].1 - sb * b[0].0;
    let ds = sa - sb;
    (ds.abs() > f64::EPSILON * (sa.abs() + sb.abs())).then(|| (ib - ia) / ds)
}

/// Index `i` with `x[i] ≤ t < x[i+1]`, clamped to a valid segment.
fn segment(x: &[f64], t: f64) -> usize {
    x.partition_point(|&v| v <= t).clamp(1, x.len() - 1) - 1
}

/// Locates the single crossing of two curves inside their common `p` range.
///
/// The reported value comes from cubic splines, the systematic error is its
/// distance to the piecewise-linear crossing, and the statistical error is
/// the largest displacement of the linear crossing when each of the four
/// bracketing points moves by ±1 standard error. The two errors are added.
pub fn find_crossing(curve1: &ScalingCurve, curve2: &ScalingCurve) -> Result<Crossing> {
    let (x1, y1, e1) = columns(curve1);
    let (x2, y2, e2) = columns(curve2);
    if x1.len() < 2 || x2.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: x1.len().min(x2.len()) });
    }
    let lo = x1[0].max(x2[0]);
    let hi = x1[x1.len() - 1].min(x2[x2.len() - 1]);
    if !(hi > lo) {
        return Err(Error::CrossingNotFound("curves do not overlap in p".into()));
    }

    let mut knots: Vec<f64> = x1.iter().chain(&x2).copied().filter(|&p| p >= lo && p <= hi).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let diff_lin = |p: f64| linear_interp(&x1, &y1, p) - linear_interp(&x2, &y2, p);
    let values: Vec<f64> = knots.iter().map(|&p| diff_lin(p)).collect();

    // the piecewise-linear difference is linear between consecutive knots
    let mut roots = Vec::new();
    for i in 0..knots.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if a == 0.0 {
            roots.push(knots[i]);
        } else if a * b < 0.0 {
            roots.push(knots[i] + a / (a - b) * (knots[i + 1] - knots[i]));
        }
    }
    if values[values.len() - 1] == 0.0 {
        roots.push(knots[knots.len() - 1]);
    }
    let p_linear = match roots.as_slice() {
        [r] => *r,
        [] => return Err(Error::CrossingNotFound(format!("no crossing in [{lo}, {hi}]"))),
        many => return Err(Error::CrossingNotFound(format!("{} crossings in [{lo}, {hi}]", many.len()))),
    };

    let s1 = CubicSpline::natural(&x1, &y1)?;
    let s2 = CubicSpline::natural(&x2, &y2)?;
    let diff_spl = |p: f64| s1.eval(p) - s2.eval(p);
    let mut spline_roots = Vec::new();
    for w in knots.windows(2) {
        let step = (w[1] - w[0]) / SPLINE_SCAN as f64;
        for k in 0..SPLINE_SCAN {
            let a = w[0] + k as f64 * step;
            let b = if k + 1 == SPLINE_SCAN { w[1] } else { a + step };
            let (fa, fb) = (diff_spl(a), diff_spl(b));
            if fa == 0.0 {
                spline_roots.push(a);
            } else if fa * fb < 0.0 {
                spline_roots.push(bisect(diff_spl, a, b));
            }
        }
    }
    if diff_spl(hi) == 0.0 {
        spline_roots.push(hi);
    }
    let p_c = spline_roots
        .iter()
        .copied()
        .min_by(|a, b| (a - p_linear).abs().total_cmp(&(b - p_linear).abs()))
        .ok_or_else(|| Error::CrossingNotFound("spline interpolants do not cross".into()))?;

    let i1 = segment(&x1, p_linear);
    let i2 = segment(&x2, p_linear);
    let mut statistical: f64 = 0.0;
    for pattern in 0u32..16 {
        let sign = |bit: u32| if pattern >> bit & 1 == 1 { 1.0 } else { -1.0 };
        let a = [(x1[i1], y1[i1] + sign(0) * e1[i1]), (x1[i1 + 1], y1[i1 + 1] + sign(1) * e1[i1 + 1])];
        let b = [(x2[i2], y2[i2] + sign(2) * e2[i2]), (x2[i2 + 1], y2[i2 + 1] + sign(3) * e2[i2 + 1])];
        if let Some(root) = line_crossing(a, b) {
            statistical = statistical.max((root - p_linear).abs());
        }
    }
    let systematic = (p_c - p_linear).abs();
    Ok(Crossing { p_c, p_c_err: systematic + statistical, p_linear, systematic, statistical })
}
