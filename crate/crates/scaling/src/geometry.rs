//! Conformal distances on a periodic chain.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Chord length `(N/π) sin(πx/N)` of a separation `x` on a ring of `n` sites.
pub fn chord_length(x: usize, n: usize) -> f64 {
    assert!(x <= n && n > 0, "separation {x} outside [0, {n}]");
    // fold onto x ≤ n/2 so that x and n - x give bit-identical results
    let x = x.min(n - x);
    n as f64 / PI * (PI * x as f64 / n as f64).sin()
}

/// Geometric mean of the chord lengths of the `k` gaps between adjacent
/// parties, including the gap that wraps around the ring.
pub fn distance_scale(gaps: &[usize], n: usize) -> Result<f64> {
    if gaps.is_empty() {
        return Err(Error::Config("distance scale needs at least one gap".into()));
    }
    if gaps.contains(&0) {
        return Err(Error::Config(format!("gaps {gaps:?} contain a zero separation")));
    }
    let total: usize = gaps.iter().sum();
    if total != n {
        return Err(Error::Config(format!("gaps {gaps:?} sum to {total}, expected {n}")));
    }
    // sorted summation keeps the result independent of the party labelling
    let mut logs: Vec<f64> = gaps.iter().map(|&g| chord_length(g, n).ln()).collect();
    logs.sort_by(f64::total_cmp);
    Ok((logs.iter().sum::<f64>() / gaps.len() as f64).exp())
}

/// Gaps `(x, x, …, N - (k-1)x)` of `k` equally spaced single-site parties.
pub fn symmetric_gaps(k: usize, x: usize, n: usize) -> Result<Vec<usize>> {
    if k < 2 || x == 0 || (k - 1) * x >= n {
        return Err(Error::Config(format!("no symmetric {k}-party layout with spacing {x} on {n} sites")));
    }
    let mut gaps = vec![x; k - 1];
    gaps.push(n - (k - 1) * x);
    Ok(gaps)
}

/// Gaps `(x, x+1, N - 2x - 1)` of the three parties `{i, i+x, i+2x+1}`.
pub fn asymmetric_gaps(x: usize, n: usize) -> Result<Vec<usize>> {
    if x == 0 || 2 * x + 1 >= n {
        return Err(Error::Config(format!("no asymmetric layout with spacing {x} on {n} sites")));
    }
    Ok(vec![x, x + 1, n - 2 * x - 1])
}
