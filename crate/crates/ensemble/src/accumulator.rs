//! Streaming ensemble aggregates with exact, order-independent merges.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use mipt_core::ewg::WeightedGridAccumulator;
use mipt_core::exact::ExactSum;

use crate::config::RunHeader;
use crate::error::{Error, Result};
use crate::observable::ObservableKey;

pub const HIST_BINS: usize = 64;
/// Lower edge of the first histogram bin (|value|).
pub const HIST_MIN: f64 = 1e-8;
/// Upper edge of the last histogram bin (|value|).
pub const HIST_MAX: f64 = 1.0;

/// Histogram bin of a nonzero value by `|value|` on a log scale; magnitudes
/// outside `[1e-8, 1]` land in the end bins.
pub fn hist_bin(value: f64) -> usize {
    let span = (HIST_MAX / HIST_MIN).log10();
    let t = (value.abs() / HIST_MIN).log10() / span * HIST_BINS as f64;
    if t.is_nan() || t < 0.0 {
        0
    } else {
        (t as usize).min(HIST_BINS - 1)
    }
}

/// `(lower, upper)` magnitude edges of bin `b`.
pub fn hist_edges(b: usize) -> (f64, f64) {
    let span = (HIST_MAX / HIST_MIN).log10();
    let at = |i: usize| HIST_MIN * 10f64.powf(span * i as f64 / HIST_BINS as f64);
    (at(b), at(b + 1))
}

/// Moments, zero/nonzero split and magnitude histogram of one key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stat {
    pub sum: ExactSum,
    pub sum_sq: ExactSum,
    pub count: u64,
    pub zero_count: u64,
    pub nonzero_count: u64,
    pub sum_nonzero: ExactSum,
    pub histogram: [u64; HIST_BINS],
}

impl Default for Stat {
    fn default() -> Self {
        Self {
            sum: ExactSum::ZERO,
            sum_sq: ExactSum::ZERO,
            count: 0,
            zero_count: 0,
            nonzero_count: 0,
            sum_nonzero: ExactSum::ZERO,
            histogram: [0; HIST_BINS],
        }
    }
}

/// `mean = p_ent · n_mag` split of an aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub mean: f64,
    pub p_ent: f64,
    pub n_mag: f64,
}

impl Stat {
    /// Records one value; exact zeros count towards `zero_count` only.
    pub fn push(&mut self, value: f64) {
        self.sum.add(value);
        self.sum_sq.add(value * value);
        self.count += 1;
        if value == 0.0 {
            self.zero_count += 1;
        } else {
            self.nonzero_count += 1;
            self.sum_nonzero.add(value);
            self.histogram[hist_bin(value)] += 1;
        }
    }

    pub fn merge(&mut self, other: &Stat) {
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
        self.count += other.count;
        self.zero_count += other.zero_count;
        self.nonzero_count += other.nonzero_count;
        self.sum_nonzero.merge(&other.sum_nonzero);
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum.value() / self.count as f64
    }

    /// Sample standard deviation over `√count`; zero below two samples.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.mean();
        let var = ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }

    pub fn decompose(&self) -> Decomposition {
        if self.count == 0 || self.nonzero_count == 0 {
            return Decomposition { mean: if self.count == 0 { 0.0 } else { self.mean() }, p_ent: 0.0, n_mag: 0.0 };
        }
        let nz = self.nonzero_count as f64;
        Decomposition {
            mean: self.mean(),
            p_ent: nz / self.count as f64,
            n_mag: self.sum_nonzero.value() / nz,
        }
    }

    /// Standard error of `n_mag` from the spread of the nonzero values.
    pub fn n_mag_stderr(&self) -> f64 {
        if self.nonzero_count < 2 {
            return 0.0;
        }
        // zeros add nothing to Σv², so sum_sq is the nonzero second moment
        let nz = self.nonzero_count as f64;
        let m = self.sum_nonzero.value() / nz;
        let var = ((self.sum_sq.value() - nz * m * m) / (nz - 1.0)).max(0.0);
        (var / nz).sqrt()
    }

    pub fn p_ent_stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let p = self.nonzero_count as f64 / self.count as f64;
        (p * (1.0 - p) / self.count as f64).sqrt()
    }
}

/// Run-level counters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Realizations that produced a state.
    pub realizations: u64,
    /// Realizations abandoned after exhausting degenerate-branch resamples.
    pub discarded_realizations: u64,
    /// Degenerate-branch attempts that were resampled.
    pub resampled_attempts: u64,
    pub sdp_solves: u64,
    pub unconverged_sdp: u64,
}

impl Counters {
    pub fn merge(&mut self, o: &Counters) {
        self.realizations += o.realizations;
        self.discarded_realizations += o.discarded_realizations;
        self.resampled_attempts += o.resampled_attempts;
        self.sdp_solves += o.sdp_solves;
        self.unconverged_sdp += o.unconverged_sdp;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAccumulator {
    pub header: RunHeader,
    /// Disjoint, sorted, coalesced realization ranges `[lo, hi)` included.
    pub covered: Vec<(u64, u64)>,
    pub counters: Counters,
    pub stats: BTreeMap<ObservableKey, Stat>,
    pub grids: BTreeMap<ObservableKey, WeightedGridAccumulator>,
    /// Per-realization translate averages, kept when the run asks for them.
    pub raw: BTreeMap<ObservableKey, Vec<(u64, f64)>>,
}

impl EnsembleAccumulator {
    pub fn new(header: RunHeader) -> Result<Self> {
        let n = header.n_qubits;
        let layers = header.circuit_config(0).n_measurement_layers();
        let mut stats = BTreeMap::new();
        let mut grids = BTreeMap::new();
        let mut raw = BTreeMap::new();
        for spec in header.observables()? {
            for key in spec.keys(n) {
                stats.insert(key, Stat::default());
                if spec.ewg {
                    grids.insert(key, WeightedGridAccumulator::new(layers, n));
                }
                if header.keep_raw {
                    raw.insert(key, Vec::new());
                }
            }
        }
        Ok(Self { header, covered: Vec::new(), counters: Counters::default(), stats, grids, raw })
    }

    pub fn merge(&mut self, other: &EnsembleAccumulator) -> Result<()> {
        if self.header != other.header {
            return Err(Error::Config("cannot merge aggregates of different runs".into()));
        }
        self.covered = union_ranges(&self.covered, &other.covered)?;
        self.counters.merge(&other.counters);
        for (key, s) in &other.stats {
            self.stats.get_mut(key).ok_or_else(|| Error::Config(format!("unknown key {key}")))?.merge(s);
        }
        for (key, g) in &other.grids {
            self.grids.get_mut(key).ok_or_else(|| Error::Config(format!("unknown grid {key}")))?.merge(g)?;
        }
        for (key, r) in &other.raw {
            let mine = self.raw.get_mut(key).ok_or_else(|| Error::Config(format!("unknown raw store {key}")))?;
            mine.extend_from_slice(r);
            mine.sort_by_key(|e| e.0);
        }
        Ok(())
    }

    /// Marks `[lo, hi)` as included; the range must not overlap coverage.
    pub fn cover(&mut self, lo: u64, hi: u64) -> Result<()> {
        self.covered = union_ranges(&self.covered, &[(lo, hi)])?;
        Ok(())
    }

    /// Realizations included so far, attempted ones (discarded too) counted.
    pub fn covered_count(&self) -> u64 {
        self.covered.iter().map(|(lo, hi)| hi - lo).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.covered == [(0, self.header.circuits_total)]
    }

    pub fn decompose(&self, key: &ObservableKey) -> Option<Decomposition> {
        self.stats.get(key).map(Stat::decompose)
    }

    /// Fraction of SDP solves that did not converge.
    pub fn unconverged_fraction(&self) -> f64 {
        if self.counters.sdp_solves == 0 {
            0.0
        } else {
            self.counters.unconverged_sdp as f64 / self.counters.sdp_solves as f64
        }
    }
}

/// Union of two coalesced range lists; overlapping ranges are an error.
pub fn union_ranges(a: &[(u64, u64)], b: &[(u64, u64)]) -> Result<Vec<(u64, u64)>> {
    let mut all: Vec<(u64, u64)> = a.iter().chain(b).copied().filter(|(lo, hi)| lo < hi).collect();
    all.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(all.len());
    for (lo, hi) in all {
        match out.last_mut() {
            Some(last) if lo < last.1 => {
                return Err(Error::Config(format!("realizations {lo}..{} are counted twice", hi.min(last.1))))
            }
            Some(last) if lo == last.1 => last.1 = hi,
            _ => out.push((lo, hi)),
        }
    }
    Ok(out)
}
