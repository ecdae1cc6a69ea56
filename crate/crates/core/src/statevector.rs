//! Dense statevector of a periodic qubit chain.
//!
//! Basis convention: site `s` is bit `s` of the basis-state index (site 0 is
//! the least significant bit). Two-site gates use the Kronecker convention
//! `index = 2 * bit(first) + bit(second)`, where `first` is the site passed as
//! `site_j` and `second` is `(site_j + 1) mod N`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

pub const MAX_QUBITS: usize = 26;
/// Largest subset a reduced density matrix may be built for.
pub const MAX_RDM_SITES: usize = 8;
/// Measurement branches below this probability are treated as impossible.
pub const DEGENERATE_BRANCH_PROBABILITY: f64 = 1e-14;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A 2x2 or 4x4 unitary, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl GateMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Self {
        assert!(dim == 2 || dim == 4, "gate dimension must be 2 or 4");
        assert_eq!(entries.len(), dim * dim);
        Self { dim, entries }
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let dim = m.nrows();
        let entries = (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect();
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![ZERO; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn matmul(&self, rhs: &GateMatrix) -> GateMatrix {
        assert_eq!(self.dim, rhs.dim);
        GateMatrix::from_matrix(&(self.to_matrix() * rhs.to_matrix()))
    }

    pub fn adjoint(&self) -> GateMatrix {
        GateMatrix::from_matrix(&self.to_matrix().adjoint())
    }

    /// `self ⊗ rhs`, with `self` acting on the more significant factor.
    pub fn kron(&self, rhs: &GateMatrix) -> GateMatrix {
        GateMatrix::from_matrix(&self.to_matrix().kronecker(&rhs.to_matrix()))
    }

    pub fn determinant(&self) -> Complex64 {
        self.to_matrix().determinant()
    }

    /// Largest entrywise deviation of `G†G` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let m = self.to_matrix();
        let prod = m.adjoint() * &m;
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix over `n_sites` qubits.
///
/// Tensor factor `t` corresponds to bit `t` of the row/column index.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking shape, Hermiticity and trace.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::InvalidDensity(format!(
                "shape {}x{} is not a square power of two",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = linalg::hermiticity_error(&matrix);
        if herm > 1e-10 {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = linalg::trace(&matrix);
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let mut matrix = matrix;
        linalg::hermitize(&mut matrix);
        Ok(Self { n_sites: dim.trailing_zeros() as usize, matrix })
    }

    /// Projector onto a normalized pure state.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        Self::new(&v * v.adjoint())
    }

    /// Uniform mixture of the given density matrices.
    pub fn mixture(weights: &[f64], states: &[DensityMatrix]) -> Result<Self> {
        assert_eq!(weights.len(), states.len());
        let dim = states[0].dim();
        let mut acc = CMatrix::zeros(dim, dim);
        for (w, s) in weights.iter().zip(states) {
            acc += s.matrix() * Complex64::new(*w, 0.0);
        }
        Self::new(acc)
    }

    pub fn maximally_mixed(n_sites: usize) -> Self {
        let dim = 1usize << n_sites;
        let m = CMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Self { n_sites, matrix: m }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        linalg::frobenius_dot(&self.matrix, &self.matrix)
    }

    /// `self ⊗ rhs` where `self` occupies the low factors.
    pub fn tensor(&self, rhs: &DensityMatrix) -> DensityMatrix {
        // kronecker puts its left operand on the high bits
        let matrix = rhs.matrix.kronecker(&self.matrix);
        DensityMatrix { n_sites: self.n_sites + rhs.n_sites, matrix }
    }

    /// Reduced state on the listed factors, in the listed order (first listed
    /// factor becomes the least significant bit).
    pub fn partial_trace_keep(&self, keep: &[usize]) -> Result<DensityMatrix> {
        check_distinct(keep, self.n_sites)?;
        let k = keep.len();
        let rest: Vec<usize> = (0..self.n_sites).filter(|f| !keep.contains(f)).collect();
        let keep_off = bit_offsets(keep);
        let rest_off = bit_offsets(&rest);
        let dk = 1usize << k;
        let mut out = CMatrix::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = ZERO;
                for &r in &rest_off {
                    acc += self.matrix[(keep_off[a] | r, keep_off[b] | r)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(DensityMatrix { n_sites: k, matrix: out })
    }
}

/// `offsets[a] = Σ_t bit_t(a) << positions[t]`.
pub(crate) fn bit_offsets(positions: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize; 1 << positions.len()];
    for (t, &pos) in positions.iter().enumerate() {
        let half = 1usize << t;
        for a in 0..half {
            offsets[a + half] = offsets[a] | (1usize << pos);
        }
    }
    offsets
}

fn check_distinct(sites: &[usize], n: usize) -> Result<()> {
    for (i, &s) in sites.iter().enumerate() {
        if s >= n {
            return Err(Error::Config(format!("site {s} out of range for {n} sites")));
        }
        if sites[..i].contains(&s) {
            return Err(Error::Config(format!("site {s} listed twice")));
        }
    }
    Ok(())
}

/// Normalized amplitude array over `2^n_qubits` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The product state `|0…0⟩`.
    pub fn new_product_state(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{n_qubits} qubits outside supported range 1..={MAX_QUBITS}"
            )));
        }
        let mut amplitudes = vec![ZERO; 1usize << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// Wraps and normalizes an arbitrary amplitude vector.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!("length {len} is not a power of two")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!("{n_qubits} qubits exceeds {MAX_QUBITS}")));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Config("zero vector".into()));
        }
        let mut s = Self { n_qubits, amplitudes };
        s.scale(1.0 / norm);
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    fn scale(&mut self, s: f64) {
        for a in &mut self.amplitudes {
            *a *= s;
        }
    }

    /// Applies a single-site unitary.
    pub fn apply_single_gate(&mut self, gate: &GateMatrix, site: usize) {
        assert_eq!(gate.dim(), 2);
        assert!(site < self.n_qubits);
        let g = gate.entries();
        let (g00, g01, g10, g11) = (g[0], g[1], g[2], g[3]);
        let bit = 1usize << site;
        let low_mask = bit - 1;
        for base in 0..(self.amplitudes.len() >> 1) {
            let i0 = ((base & !low_mask) << 1) | (base & low_mask);
            let i1 = i0 | bit;
            let a0 = self.amplitudes[i0];
            let a1 = self.amplitudes[i1];
            self.amplitudes[i0] = g00 * a0 + g01 * a1;
            self.amplitudes[i1] = g10 * a0 + g11 * a1;
        }
    }

    /// Applies a two-site unitary to sites `(site_j, site_j + 1 mod N)`.
    pub fn apply_pair_gate(&mut self, gate: &GateMatrix, site_j: usize) {
        assert_eq!(gate.dim(), 4);
        assert!(self.n_qubits >= 2 && site_j < self.n_qubits);
        debug_assert!(gate.unitarity_error() < 1e-10, "non-unitary gate");
        let mut g = [ZERO; 16];
        g.copy_from_slice(gate.entries());
        let first = 1usize << site_j;
        let second = 1usize << ((site_j + 1) % self.n_qubits);
        let (lo, hi) = if first < second { (first, second) } else { (second, first) };
        let lo_mask = lo - 1;
        let hi_mask = hi - 1;
        let amps = &mut self.amplitudes;
        for base in 0..(amps.len() >> 2) {
            // insert zero bits at the two target positions
            let t = ((base & !lo_mask) << 1) | (base & lo_mask);
            let i00 = ((t & !hi_mask) << 1) | (t & hi_mask);
            let idx = [i00, i00 | second, i00 | first, i00 | first | second];
            let v = [amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]];
            for r in 0..4 {
                let row = &g[4 * r..4 * r + 4];
                amps[idx[r]] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
            }
        }
    }

    /// Probability that `site` reads 0 in the computational basis.
    pub fn probability_zero(&self, site: usize) -> f64 {
        let bit = 1usize << site;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Born-rule projective Z measurement. Outcome 0 is chosen iff
    /// `uniform_draw < P(0)`; the state is projected and renormalized.
    pub fn measure_z(&mut self, site: usize, uniform_draw: f64) -> Result<u8> {
        assert!(site < self.n_qubits);
        let p0 = self.probability_zero(site).clamp(0.0, 1.0);
        let outcome: u8 = if uniform_draw < p0 { 0 } else { 1 };
        let p = if outcome == 0 { p0 } else { 1.0 - p0 };
        if p < DEGENERATE_BRANCH_PROBABILITY {
            return Err(Error::DegenerateBranch { site, probability: p });
        }
        self.project(site, outcome);
        Ok(outcome)
    }

    /// Projects `site` onto `outcome` and renormalizes.
    pub fn project(&mut self, site: usize, outcome: u8) {
        let bit = 1usize << site;
        let keep = if outcome == 0 { 0 } else { bit };
        let mut norm = 0.0;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & bit != keep {
                *a = ZERO;
            } else {
                norm += a.norm_sqr();
            }
        }
        self.scale(1.0 / norm.sqrt());
    }

    /// Coefficient matrix `M[a, c] = ψ[sites ↦ a, rest ↦ c]`, so that the
    /// reduced state on `sites` is `M M†`.
    fn coefficient_matrix(&self, sites: &[usize]) -> CMatrix {
        let rest: Vec<usize> = (0..self.n_qubits).filter(|s| !sites.contains(s)).collect();
        let sub = bit_offsets(sites);
        let comp = bit_offsets(&rest);
        DMatrix::from_fn(sub.len(), comp.len(), |a, c| self.amplitudes[sub[a] | comp[c]])
    }

    /// Partial trace over the complement of `sites`. Row/column ordering
    /// follows the given site order (first listed site is the least
    /// significant bit of the RDM index).
    pub fn reduced_density_matrix(&self, sites: &[usize]) -> Result<DensityMatrix> {
        if sites.is_empty() || sites.len() > MAX_RDM_SITES {
            return Err(Error::Capacity(format!(
                "reduced density matrix over {} sites (supported 1..={MAX_RDM_SITES})",
                sites.len()
            )));
        }
        check_distinct(sites, self.n_qubits)?;
        Ok(self.rdm_unchecked(sites))
    }

    pub(crate) fn rdm_unchecked(&self, sites: &[usize]) -> DensityMatrix {
        let m = self.coefficient_matrix(sites);
        let mut rho = &m * m.adjoint();
        linalg::hermitize(&mut rho);
        DensityMatrix { n_sites: sites.len(), matrix: rho }
    }

    /// Eigenvalues of the reduced state of `sites`, using whichever side of the
    /// cut is smaller (the nonzero spectra of both sides coincide for a pure
    /// state).
    pub fn reduced_spectrum(&self, sites: &[usize]) -> Result<Vec<f64>> {
        check_distinct(sites, self.n_qubits)?;
        if sites.is_empty() || sites.len() == self.n_qubits {
            return Ok(vec![1.0]);
        }
        let rest: Vec<usize> = (0..self.n_qubits).filter(|s| !sites.contains(s)).collect();
        let small = if sites.len() <= rest.len() { sites } else { &rest[..] };
        if small.len() > MAX_QUBITS / 2 {
            return Err(Error::Capacity(format!("cut of {} sites", small.len())));
        }
        Ok(self.rdm_unchecked(small).eigenvalues())
    }
}
