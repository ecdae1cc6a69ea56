//! Brickwork hybrid circuits with periodic boundaries.
//!
//! One period is: even unitary layer on pairs `(2k, 2k+1)`, a measurement
//! layer, odd unitary layer on pairs `(2k+1, 2k+2 mod N)` including the wrap
//! pair `(N-1, 0)`, and a second measurement layer. After
//! `ceil(periods_multiplier * N)` periods one extra even layer is applied,
//! followed by a measurement layer at `final_layer_measure_prob`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gates;
use crate::rng::{realization_stream, StreamRng};
use crate::statevector::{GateMatrix, StateVector};

/// Realizations hitting a degenerate branch are resampled at most this often.
pub const MAX_RESAMPLE_ATTEMPTS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateEnsemble {
    Mms,
    Haar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitConfig {
    pub n_qubits: usize,
    pub p_measure: f64,
    pub periods_multiplier: f64,
    pub gate_ensemble: GateEnsemble,
    pub final_layer_measure_prob: f64,
    pub master_seed: u64,
    pub realization_index: u64,
}

impl CircuitConfig {
    pub fn new(n_qubits: usize, p_measure: f64) -> Self {
        Self {
            n_qubits,
            p_measure,
            periods_multiplier: 1.0,
            gate_ensemble: GateEnsemble::Mms,
            final_layer_measure_prob: 0.5,
            master_seed: 0,
            realization_index: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if !(4..=crate::statevector::MAX_QUBITS).contains(&n) || n % 2 != 0 {
            return Err(Error::Config(format!(
                "brickwork chains need an even N in 4..={}, got {n}",
                crate::statevector::MAX_QUBITS
            )));
        }
        if !(0.0..=1.0).contains(&self.p_measure) {
            return Err(Error::Config(format!("p_measure {} outside [0,1]", self.p_measure)));
        }
        if !(0.0..=1.0).contains(&self.final_layer_measure_prob) {
            return Err(Error::Config(format!(
                "final_layer_measure_prob {} outside [0,1]",
                self.final_layer_measure_prob
            )));
        }
        if !(self.periods_multiplier > 0.0 && self.periods_multiplier.is_finite()) {
            return Err(Error::Config(format!(
                "periods_multiplier must be positive, got {}",
                self.periods_multiplier
            )));
        }
        Ok(())
    }

    pub fn n_periods(&self) -> usize {
        (self.periods_multiplier * self.n_qubits as f64 - 1e-9).ceil() as usize
    }

    /// Two per period plus the final half-rate layer.
    pub fn n_measurement_layers(&self) -> usize {
        2 * self.n_periods() + 1
    }

    /// Unitary layers including the final even layer.
    pub fn n_unitary_layers(&self) -> usize {
        2 * self.n_periods() + 1
    }
}

/// Binary spacetime record of where measurements happened and what they read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    n_qubits: usize,
    n_layers: usize,
    grid: Vec<u8>,
    outcomes: Vec<u8>,
}

impl MeasurementRecord {
    pub fn new(n_layers: usize, n_qubits: usize) -> Self {
        Self {
            n_qubits,
            n_layers,
            grid: vec![0; n_layers * n_qubits],
            outcomes: vec![0; n_layers * n_qubits],
        }
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn is_measured(&self, layer: usize, site: usize) -> bool {
        self.grid[layer * self.n_qubits + site] != 0
    }

    /// Outcome at a measured cell; `None` where no measurement occurred.
    pub fn outcome(&self, layer: usize, site: usize) -> Option<u8> {
        let k = layer * self.n_qubits + site;
        (self.grid[k] != 0).then_some(self.outcomes[k])
    }

    pub fn record(&mut self, layer: usize, site: usize, outcome: u8) {
        let k = layer * self.n_qubits + site;
        self.grid[k] = 1;
        self.outcomes[k] = outcome;
    }

    /// Layer-major 0/1 grid.
    pub fn grid(&self) -> &[u8] {
        &self.grid
    }

    /// Index of the final (half-rate) measurement layer.
    pub fn final_layer(&self) -> usize {
        self.n_layers - 1
    }

    /// Number of measured cells in all layers except the final one.
    pub fn bulk_measured(&self) -> usize {
        self.grid[..(self.n_layers - 1) * self.n_qubits].iter().map(|&g| g as usize).sum()
    }
}

/// Outcome of one circuit realization.
#[derive(Debug, Clone)]
pub struct Realization {
    pub state: StateVector,
    pub record: MeasurementRecord,
    /// Attempts discarded because of a numerically degenerate branch.
    pub discarded: u32,
}

/// Pairs `(j, j+1 mod N)` acted on by an even or odd layer, by first site.
pub fn layer_pairs(n_qubits: usize, odd: bool) -> impl Iterator<Item = usize> {
    (0..n_qubits / 2).map(move |k| 2 * k + usize::from(odd))
}

/// Applies the same gate to every pair of an even or odd layer.
pub fn apply_uniform_layer(state: &mut StateVector, gate: &GateMatrix, odd: bool) {
    for j in layer_pairs(state.n_qubits(), odd) {
        state.apply_pair_gate(gate, j);
    }
}

fn apply_random_layer(
    state: &mut StateVector,
    ensemble: GateEnsemble,
    odd: bool,
    rng: &mut StreamRng,
) {
    for j in layer_pairs(state.n_qubits(), odd) {
        match ensemble {
            GateEnsemble::Mms => {
                let g = gates::mms_gate_by_index(gates::sample_mms_index(rng));
                state.apply_pair_gate(g, j);
            }
            GateEnsemble::Haar => state.apply_pair_gate(&gates::sample_haar_gate(rng), j),
        }
    }
}

/// Per-site Bernoulli(`prob`) Z measurements in ascending site order. Two
/// uniform draws per measured site, one per unmeasured site.
fn apply_measurement_layer(
    state: &mut StateVector,
    record: &mut MeasurementRecord,
    layer: usize,
    prob: f64,
    rng: &mut StreamRng,
) -> Result<()> {
    for site in 0..state.n_qubits() {
        if rng.random::<f64>() < prob {
            let outcome = state.measure_z(site, rng.random::<f64>())?;
            record.record(layer, site, outcome);
        }
    }
    Ok(())
}

fn run_attempt(config: &CircuitConfig, rng: &mut StreamRng) -> Result<(StateVector, MeasurementRecord)> {
    let n = config.n_qubits;
    let mut state = StateVector::new_product_state(n)?;
    let mut record = MeasurementRecord::new(config.n_measurement_layers(), n);
    let mut layer = 0;
    for _ in 0..config.n_periods() {
        for odd in [false, true] {
            apply_random_layer(&mut state, config.gate_ensemble, odd, rng);
            apply_measurement_layer(&mut state, &mut record, layer, config.p_measure, rng)?;
            layer += 1;
        }
    }
    apply_random_layer(&mut state, config.gate_ensemble, false, rng);
    apply_measurement_layer(&mut state, &mut record, layer, config.final_layer_measure_prob, rng)?;
    Ok((state, record))
}

/// Runs one realization with the stream derived from
/// `(master_seed, realization_index)`. Degenerate branches discard the attempt
/// and retry on a fresh derived stream.
pub fn run_realization(config: &CircuitConfig) -> Result<Realization> {
    config.validate()?;
    let mut last_err = None;
    for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
        let mut rng = realization_stream(config.master_seed, config.realization_index, attempt);
        match run_attempt(config, &mut rng) {
            Ok((state, record)) => return Ok(Realization { state, record, discarded: attempt }),
            Err(e @ Error::DegenerateBranch { .. }) => {
                log::warn!(
                    "realization {} attempt {attempt} discarded: {e}",
                    config.realization_index
                );
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}
