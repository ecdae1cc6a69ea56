//! Weighted power-law fits `mean ≈ A d^{-α}` in log-log coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::DecaySeries;

/// Floor on the per-point relative error used as the log-space σ.
pub const MIN_RELATIVE_ERROR: f64 = 0.03;

/// Default lower fit windows in `d` for `k = 2, 3, 4` parties.
pub fn default_window(k: usize) -> Option<(f64, f64)> {
    match k {
        2 => Some((6.2, 8.2)),
        3 => Some((4.7, 6.5)),
        4 => Some((2.8, 5.5)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub alpha_err: f64,
    pub prefactor: f64,
    pub points_used: usize,
    /// Points inside the window dropped because their mean was not positive.
    pub excluded_nonpositive: usize,
}

/// Straight-line weighted least squares `y = a + b x`; returns
/// `(a, b, var_a, var_b)` from the inverse normal matrix.
pub fn weighted_line(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if x.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: x.len() });
    }
    let (mut s, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let w = sigma[i].powi(-2);
        s += w;
        sx += w * x[i];
        sy += w * y[i];
    }
    // centred sums avoid cancellation in the determinant
    let (xm, ym) = (sx / s, sy / s);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..x.len() {
        let w = sigma[i].powi(-2);
        sxx += w * (x[i] - xm).powi(2);
        sxy += w * (x[i] - xm) * (y[i] - ym);
    }
    if !(sxx > 0.0) {
        return Err(Error::Config("fit abscissae are all equal".into()));
    }
    let b = sxy / sxx;
    let a = ym - b * xm;
    Ok((a, b, 1.0 / s + xm * xm / sxx, 1.0 / sxx))
}

/// Fits the points with `d_min ≤ d ≤ d_max`, using σ = max(stderr/mean, 0.03)
/// in log space. Nonpositive means are excluded and counted.
pub fn fit_power_law(series: &DecaySeries, d_min: f64, d_max: f64) -> Result<PowerLawFit> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sigma = Vec::new();
    let mut excluded = 0;
    for pt in series.points().iter().filter(|pt| pt.d >= d_min && pt.d <= d_max) {
        if pt.mean > 0.0 {
            x.push(pt.d.ln());
            y.push(pt.mean.ln());
            sigma.push((pt.stderr / pt.mean).max(MIN_RELATIVE_ERROR));
        } else {
            excluded += 1;
        }
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, found: x.len() });
    }
    let (a, b, _, var_b) = weighted_line(&x, &y, &sigma)?;
    Ok(PowerLawFit {
        alpha: -b,
        alpha_err: var_b.sqrt(),
        prefactor: a.exp(),
        points_used: x.len(),
        excluded_nonpositive: excluded,
    })
}

/// Fits the `count` largest-`d` points of the series.
pub fn fit_tail(series: &DecaySeries, count: usize) -> Result<PowerLawFit> {
    let pts = series.points();
    if pts.len() < count || count == 0 {
        return Err(Error::InsufficientData { needed: count.max(3), found: pts.len() });
    }
    let lo = pts[pts.len() - count].d;
    let hi = pts[pts.len() - 1].d;
    fit_power_law(series, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{DecayPoint, Metric};

    fn series(points: Vec<(f64, f64, f64)>) -> DecaySeries {
        let pts = points.into_iter().map(|(d, mean, stderr)| DecayPoint { d, mean, stderr }).collect();
        DecaySeries::new(16, 2, Metric::Mi, pts).unwrap()
    }

    #[test]
    fn exact_power_law() {
        let s = series((1..=8).map(|i| (i as f64, 7.0 * (i as f64).powi(-4), 0.0)).collect());
        let f = fit_power_law(&s, 0.0, 100.0).unwrap();
        assert!((f.alpha - 4.0).abs() < 1e-10);
        assert!((f.prefactor - 7.0).abs() < 1e-9);
        assert_eq!(f.points_used, 8);
    }

    #[test]
    fn nonpositive_excluded_and_counted() {
        let mut pts: Vec<_> = (1..=5).map(|i| (i as f64, (i as f64).powi(-2), 0.01)).collect();
        pts.push((6.0, 0.0, 0.01));
        pts.push((7.0, -1e-3, 0.01));
        let f = fit_power_law(&series(pts), 0.0, 10.0).unwrap();
        assert_eq!(f.excluded_nonpositive, 2);
        assert!((f.alpha - 2.0).abs() < 1e-10);
    }

    #[test]
    fn too_few_points() {
        let s = series(vec![(1.0, 1.0, 0.1), (2.0, 0.5, 0.1), (3.0, -0.1, 0.1)]);
        assert_eq!(fit_power_law(&s, 0.0, 10.0), Err(Error::InsufficientData { needed: 3, found: 2 }));
    }

    #[test]
    fn relative_error_floor_sets_uncertainty() {
        // with exact data the error comes from σ = 0.03 alone
        let d: Vec<f64> = vec![1.0, 2.0, 4.0];
        let s = series(d.iter().map(|&d| (d, d.powi(-3), 0.0)).collect());
        let f = fit_power_law(&s, 0.0, 10.0).unwrap();
        let x: Vec<f64> = d.iter().map(|v| v.ln()).collect();
        let xm = x.iter().sum::<f64>() / 3.0;
        let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
        assert!((f.alpha_err - MIN_RELATIVE_ERROR / sxx.sqrt()).abs() < 1e-12);
    }
}
