//! Resampling error estimates for the large-size extrapolations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::collapse::collapse;
use crate::crossing::find_crossing;
use crate::error::{Error, Result};
use crate::extrapolate::{extrapolate_pairs, PairValue};
use crate::series::{mean_stderr, ScalingCurve};

/// Raw per-realization values of one observable at one `(N, p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSamples {
    pub n_qubits: usize,
    pub p: f64,
    pub values: Vec<f64>,
}

/// Draws `size` values with replacement.
pub fn resample<R: Rng + ?Sized>(values: &[f64], size: usize, rng: &mut R) -> Vec<f64> {
    (0..size).map(|_| values[rng.random_range(0..values.len())]).collect()
}

/// Sample standard deviation (`n - 1` normalization).
pub fn sample_std(values: &[f64]) -> f64 {
    let (_, stderr) = mean_stderr(values);
    stderr * (values.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStats {
    pub mean: f64,
    pub std: f64,
    /// Resamples on which the statistic was defined.
    pub used: usize,
}

/// Standard deviation of `statistic` over `resamples` reduced data sets, each
/// drawing `subsample_size` values with replacement from every group.
pub fn bootstrap_std<R: Rng + ?Sized>(
    groups: &[&[f64]],
    resamples: usize,
    subsample_size: usize,
    rng: &mut R,
    mut statistic: impl FnMut(&[Vec<f64>]) -> Option<f64>,
) -> Result<BootstrapStats> {
    if groups.iter().any(|g| g.is_empty()) || subsample_size == 0 {
        return Err(Error::Config("bootstrap needs non-empty groups and subsamples".into()));
    }
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let reduced: Vec<Vec<f64>> = groups.iter().map(|g| resample(g, subsample_size, rng)).collect();
        if let Some(v) = statistic(&reduced) {
            stats.push(v);
        }
    }
    if stats.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: stats.len() });
    }
    let (mean, _) = mean_stderr(&stats);
    Ok(BootstrapStats { mean, std: sample_std(&stats), used: stats.len() })
}

/// Grids for the per-pair collapse inside each resample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseGrid {
    pub p_c: Vec<f64>,
    pub nu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapExtrapolation {
    pub nu_std: f64,
    pub pc_collapse_std: f64,
    pub pc_crossing_std: f64,
    pub resamples_used: usize,
}

/// Per-pair estimates from one data set: `(crossing p_c, collapse p_c, collapse ν)`.
fn pair_estimates(curves: &[ScalingCurve], grid: &CollapseGrid) -> Option<(Vec<PairValue>, Vec<PairValue>, Vec<PairValue>)> {
    let (mut cross, mut pc, mut nu) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let (a, b) = (&curves[i], &curves[j]);
            let c = find_crossing(a, b).ok()?;
            let col = collapse(a, b, &grid.p_c, &grid.nu).ok()?;
            cross.push((a.n_qubits, b.n_qubits, c.p_c));
            pc.push((a.n_qubits, b.n_qubits, col.p_c));
            nu.push((a.n_qubits, b.n_qubits, col.nu));
        }
    }
    Some((cross, pc, nu))
}

/// Spread of the extrapolated `ν` and `p_c` across bootstrap resamples of the
/// raw per-realization data, each point reduced to `subsample_size` draws.
///
/// Every size pair contributes a crossing and a collapse; each quantity is
/// extrapolated linearly in `(N₁N₂)⁻¹`. Resamples where any step fails are
/// skipped and not counted.
pub fn bootstrap_extrapolation<R: Rng + ?Sized>(
    raw: &[RawSamples],
    resamples: usize,
    subsample_size: usize,
    grid: &CollapseGrid,
    rng: &mut R,
) -> Result<BootstrapExtrapolation> {
    let mut sizes: Vec<usize> = raw.iter().map(|r| r.n_qubits).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() * (sizes.len().saturating_sub(1)) / 2 < 2 {
        return Err(Error::ExtrapolationUnavailable(format!("{} sizes give fewer than 2 pairs", sizes.len())));
    }
    let groups: Vec<&[f64]> = raw.iter().map(|r| r.values.as_slice()).collect();
    let build = |reduced: &[Vec<f64>]| -> Option<Vec<ScalingCurve>> {
        sizes
            .iter()
            .map(|&n| {
                let samples: Vec<(f64, Vec<f64>)> = raw
                    .iter()
                    .zip(reduced)
                    .filter(|(r, _)| r.n_qubits == n)
                    .map(|(r, v)| (r.p, v.clone()))
                    .collect();
                ScalingCurve::from_samples(n, &samples).ok()
            })
            .collect()
    };

    let mut nus = Vec::new();
    let mut pcs = Vec::new();
    let mut crosses = Vec::new();
    bootstrap_std(&groups, resamples, subsample_size, rng, |reduced| {
        let curves = build(reduced)?;
        let (cross, pc, nu) = pair_estimates(&curves, grid)?;
        let values = (
            extrapolate_pairs(&cross).ok()?.intercept,
            extrapolate_pairs(&pc).ok()?.intercept,
            extrapolate_pairs(&nu).ok()?.intercept,
        );
        crosses.push(values.0);
        pcs.push(values.1);
        nus.push(values.2);
        Some(values.2)
    })?;
    Ok(BootstrapExtrapolation {
        nu_std: sample_std(&nus),
        pc_collapse_std: sample_std(&pcs),
        pc_crossing_std: sample_std(&crosses),
        resamples_used: nus.len(),
    })
}
