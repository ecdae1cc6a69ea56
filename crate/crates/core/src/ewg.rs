//! Entanglement-weighted spacetime measurement-rate graphs.
//!
//! Each realization contributes its 0/1 measurement grid twice: once with
//! unit weight (baseline rate) and once scaled by the entanglement or
//! correlation it generated in the target regions.

use crate::circuit::MeasurementRecord;
use crate::error::{Error, Result};
use crate::exact::ExactSum;

/// Spacetime grid of per-cell rates, layer-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RateGrid {
    pub n_layers: usize,
    pub n_sites: usize,
    pub values: Vec<f64>,
}

impl RateGrid {
    pub fn get(&self, layer: usize, site: usize) -> f64 {
        self.values[layer * self.n_sites + site]
    }

    /// Index of the last layer, measured at the reduced final-layer rate.
    pub fn final_layer(&self) -> usize {
        self.n_layers - 1
    }

    pub fn row(&self, layer: usize) -> &[f64] {
        &self.values[layer * self.n_sites..(layer + 1) * self.n_sites]
    }
}

/// Weight for an MI-weighted graph: `(-1)^k I_k` clamped at zero.
///
/// Returns the weight and whether the realization had the sign opposite to
/// the ensemble hierarchy.
pub fn mi_weight(k: usize, value: f64) -> (f64, bool) {
    let signed = if k % 2 == 0 { value } else { -value };
    if signed < 0.0 {
        (0.0, true)
    } else {
        (signed, false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGridAccumulator {
    n_layers: usize,
    n_sites: usize,
    weighted_sum: Vec<ExactSum>,
    weight_total: ExactSum,
    unweighted_sum: Vec<u64>,
    realization_count: u64,
    sign_violations: u64,
}

impl WeightedGridAccumulator {
    pub fn new(n_layers: usize, n_sites: usize) -> Self {
        Self {
            n_layers,
            n_sites,
            weighted_sum: vec![ExactSum::ZERO; n_layers * n_sites],
            weight_total: ExactSum::ZERO,
            unweighted_sum: vec![0; n_layers * n_sites],
            realization_count: 0,
            sign_violations: 0,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn weight_total(&self) -> f64 {
        self.weight_total.value()
    }

    pub fn realization_count(&self) -> u64 {
        self.realization_count
    }

    pub fn sign_violations(&self) -> u64 {
        self.sign_violations
    }

    pub fn weighted_sums(&self) -> &[ExactSum] {
        &self.weighted_sum
    }

    pub fn weight_sum(&self) -> ExactSum {
        self.weight_total
    }

    pub fn unweighted_sums(&self) -> &[u64] {
        &self.unweighted_sum
    }

    pub fn accumulate(&mut self, record: &MeasurementRecord, weight: f64) -> Result<()> {
        self.accumulate_shifted(record, weight, 0)
    }

    /// Adds a record whose site `s` is mapped to column `(s - shift) mod N`,
    /// aligning a translated region with the canonical one.
    pub fn accumulate_shifted(&mut self, record: &MeasurementRecord, weight: f64, shift: usize) -> Result<()> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::Config(format!("grid weight must be finite and non-negative, got {weight}")));
        }
        if record.n_layers() != self.n_layers || record.n_qubits() != self.n_sites {
            return Err(Error::Config(format!(
                "record of shape {}x{} does not match accumulator {}x{}",
                record.n_layers(),
                record.n_qubits(),
                self.n_layers,
                self.n_sites
            )));
        }
        let n = self.n_sites;
        let q = ExactSum::quantize(weight);
        for layer in 0..self.n_layers {
            for site in 0..n {
                if record.is_measured(layer, site) {
                    let col = (site + n - shift % n) % n;
                    let k = layer * n + col;
                    self.unweighted_sum[k] += 1;
                    self.weighted_sum[k] = ExactSum::from_raw(self.weighted_sum[k].raw() + q);
                }
            }
        }
        self.weight_total = ExactSum::from_raw(self.weight_total.raw() + q);
        self.realization_count += 1;
        Ok(())
    }

    /// Accumulates with the MI sign rule of [`mi_weight`].
    pub fn accumulate_mi(&mut self, record: &MeasurementRecord, k: usize, value: f64, shift: usize) -> Result<()> {
        let (w, violated) = mi_weight(k, value);
        self.sign_violations += u64::from(violated);
        self.accumulate_shifted(record, w, shift)
    }

    pub fn merge(&mut self, other: &WeightedGridAccumulator) -> Result<()> {
        if other.n_layers != self.n_layers || other.n_sites != self.n_sites {
            return Err(Error::Config("cannot merge grids of different shapes".into()));
        }
        for (a, b) in self.weighted_sum.iter_mut().zip(&other.weighted_sum) {
            a.merge(b);
        }
        for (a, b) in self.unweighted_sum.iter_mut().zip(&other.unweighted_sum) {
            *a += b;
        }
        self.weight_total.merge(&other.weight_total);
        self.realization_count += other.realization_count;
        self.sign_violations += other.sign_violations;
        Ok(())
    }

    /// Rebuilds an accumulator from persisted parts.
    pub fn from_parts(
        n_layers: usize,
        n_sites: usize,
        weighted_sum: Vec<ExactSum>,
        weight_total: ExactSum,
        unweighted_sum: Vec<u64>,
        realization_count: u64,
        sign_violations: u64,
    ) -> Result<Self> {
        if weighted_sum.len() != n_layers * n_sites || unweighted_sum.len() != n_layers * n_sites {
            return Err(Error::Config("grid buffers do not match the declared shape".into()));
        }
        Ok(Self { n_layers, n_sites, weighted_sum, weight_total, unweighted_sum, realization_count, sign_violations })
    }

    /// Baseline rate grid `unweighted_sum / realization_count`.
    pub fn baseline(&self) -> RateGrid {
        let count = self.realization_count.max(1) as f64;
        RateGrid {
            n_layers: self.n_layers,
            n_sites: self.n_sites,
            values: self.unweighted_sum.iter().map(|&c| c as f64 / count).collect(),
        }
    }

    /// Returns `(weighted rate grid, baseline rate grid)`.
    pub fn finalize(&self) -> Result<(RateGrid, RateGrid)> {
        if self.weight_total.raw() <= 0 {
            return Err(Error::EmptyWeight);
        }
        let total = self.weight_total.raw() as f64;
        let weighted = RateGrid {
            n_layers: self.n_layers,
            n_sites: self.n_sites,
            values: self.weighted_sum.iter().map(|s| (s.raw() as f64 / total).clamp(0.0, 1.0)).collect(),
        };
        Ok((weighted, self.baseline()))
    }
}
