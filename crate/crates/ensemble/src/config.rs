//! Run configuration and the run identity stored with every aggregate.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use mipt_core::circuit::{CircuitConfig, GateEnsemble};

use crate::error::{Error, Result};
use crate::observable::{parse_observables, ObservableSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateChoice {
    Mms,
    Haar,
}

impl GateChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mms" => Ok(GateChoice::Mms),
            "haar" => Ok(GateChoice::Haar),
            other => Err(Error::Config(format!("unknown gate ensemble {other:?} (expected mms or haar)"))),
        }
    }

    fn to_core(self) -> GateEnsemble {
        match self {
            GateChoice::Mms => GateEnsemble::Mms,
            GateChoice::Haar => GateEnsemble::Haar,
        }
    }
}

/// Everything that determines the contents of an aggregate. Two aggregates
/// can be merged only when their headers are equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub n_qubits: usize,
    pub p_measure: f64,
    pub periods_multiplier: f64,
    pub gate_ensemble: GateChoice,
    pub final_layer_measure_prob: f64,
    pub master_seed: u64,
    pub circuits_total: u64,
    /// Canonical observable string.
    pub observables: String,
    pub keep_raw: bool,
}

impl RunHeader {
    pub fn circuit_config(&self, realization_index: u64) -> CircuitConfig {
        CircuitConfig {
            n_qubits: self.n_qubits,
            p_measure: self.p_measure,
            periods_multiplier: self.periods_multiplier,
            gate_ensemble: self.gate_ensemble.to_core(),
            final_layer_measure_prob: self.final_layer_measure_prob,
            master_seed: self.master_seed,
            realization_index,
        }
    }

    pub fn observables(&self) -> Result<Vec<ObservableSpec>> {
        parse_observables(&self.observables)
    }

    /// Canonicalizes the observable string and checks every limit.
    pub fn validate(&mut self) -> Result<()> {
        self.circuit_config(0).validate()?;
        if self.circuits_total == 0 {
            return Err(Error::Config("circuits_total must be positive".into()));
        }
        let specs = parse_observables(&self.observables)?;
        for s in &specs {
            s.validate(self.n_qubits)?;
        }
        self.observables = specs.iter().map(ObservableSpec::to_spec_string).collect::<Vec<_>>().join(";");
        Ok(())
    }
}

/// Shard `index` of `count`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shard {
    pub index: u64,
    pub count: u64,
}

impl Shard {
    pub const WHOLE: Shard = Shard { index: 0, count: 1 };

    /// Parses the 1-based `i/m` form used on the command line.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("shard must look like i/m with 1 ≤ i ≤ m, got {s:?}"));
        let (i, m) = s.split_once('/').ok_or_else(bad)?;
        let i: u64 = i.trim().parse().map_err(|_| bad())?;
        let m: u64 = m.trim().parse().map_err(|_| bad())?;
        if m == 0 || i == 0 || i > m {
            return Err(bad());
        }
        Ok(Shard { index: i - 1, count: m })
    }

    /// Contiguous realization range `[iT/m, (i+1)T/m)`.
    pub fn range(&self, total: u64) -> (u64, u64) {
        let at = |i: u64| ((i as u128 * total as u128) / self.count as u128) as u64;
        (at(self.index), at(self.index + 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub header: RunHeader,
    pub shard: Shard,
    pub out_dir: PathBuf,
    pub checkpoint_every: u64,
}

impl RunConfig {
    pub fn validate(&mut self) -> Result<()> {
        self.header.validate()?;
        if self.shard.count == 0 || self.shard.index >= self.shard.count {
            return Err(Error::Config(format!("invalid shard {:?}", self.shard)));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Config("checkpoint_every must be positive".into()));
        }
        Ok(())
    }
}
