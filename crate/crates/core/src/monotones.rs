//! Partial transposes, bipartite negativity, genuine multiparty negativity
//! (GMN) via fully decomposable witnesses, and CKW monogamy checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::sdp::{solve_interior, Cone, Coordinate, Field, Part, SdpProblem, SdpStatus};
use crate::statevector::{DensityMatrix, StateVector};

/// GMN values at or below this are recorded as exactly zero.
pub const GMN_ZERO_THRESHOLD: f64 = 1e-6;
/// Negativities below this are clamped to zero.
pub const NEGATIVITY_TOL: f64 = 1e-9;
/// A cut whose partial transpose has `λ_min ≥ -PPT_TOL` is treated as PPT.
pub const PPT_TOL: f64 = 1e-9;
pub const CKW_TOL: f64 = 1e-9;

/// A split of parties `0..k` into two nonempty groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    m1: Vec<usize>,
    m2: Vec<usize>,
}

impl Bipartition {
    pub fn new(k: usize, m1: &[usize]) -> Result<Self> {
        let mut a: Vec<usize> = m1.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.len() != m1.len() || a.iter().any(|&p| p >= k) {
            return Err(Error::Config(format!("invalid bipartition {m1:?} of {k} parties")));
        }
        let b: Vec<usize> = (0..k).filter(|p| !a.contains(p)).collect();
        if a.is_empty() || b.is_empty() {
            return Err(Error::Config("bipartition sides must be nonempty".into()));
        }
        Ok(Self { m1: a, m2: b })
    }

    pub fn m1(&self) -> &[usize] {
        &self.m1
    }

    pub fn m2(&self) -> &[usize] {
        &self.m2
    }

    /// Returns the same cut with party 0 on the first side.
    pub fn canonical(&self) -> Self {
        if self.m1.contains(&0) {
            self.clone()
        } else {
            Self { m1: self.m2.clone(), m2: self.m1.clone() }
        }
    }

    /// All `2^{k-1} - 1` cuts with party 0 in `m1`.
    pub fn enumerate(k: usize) -> Vec<Self> {
        assert!(k >= 2);
        (0u32..(1 << (k - 1)) - 1)
            .map(|rest| {
                // bit r of `rest` places party r + 1 in m1
                let m1: Vec<usize> =
                    std::iter::once(0).chain((1..k).filter(|&p| rest >> (p - 1) & 1 == 1)).collect();
                Self::new(k, &m1).expect("valid by construction")
            })
            .collect()
    }
}

/// Bit mask covering the given tensor factors, where factor `f` spans
/// `factor_qubits[f]` consecutive bits starting after the earlier factors.
fn factor_mask(factor_qubits: &[usize], factors: &[usize]) -> Result<usize> {
    let mut offsets = Vec::with_capacity(factor_qubits.len());
    let mut acc = 0;
    for &q in factor_qubits {
        offsets.push(acc);
        acc += q;
    }
    let mut mask = 0usize;
    for &f in factors {
        if f >= factor_qubits.len() {
            return Err(Error::Config(format!(
                "factor {f} out of range for {} factors",
                factor_qubits.len()
            )));
        }
        mask |= ((1usize << factor_qubits[f]) - 1) << offsets[f];
    }
    Ok(mask)
}

/// Index pair that supplies entry `(i, j)` of the partial transpose over `mask`.
#[inline]
fn transposed_index(i: usize, j: usize, mask: usize) -> (usize, usize) {
    ((i & !mask) | (j & mask), (j & !mask) | (i & mask))
}

fn transpose_by_mask(m: &CMatrix, mask: usize) -> CMatrix {
    let d = m.nrows();
    CMatrix::from_fn(d, d, |i, j| {
        let (a, b) = transposed_index(i, j, mask);
        m[(a, b)]
    })
}

/// Partial transpose of `rho` over the listed tensor factors, with each
/// factor a contiguous group of qubits (`factor_qubits`, first factor least
/// significant).
pub fn partial_transpose_factors(
    rho: &CMatrix,
    factor_qubits: &[usize],
    factors: &[usize],
) -> Result<CMatrix> {
    let total: usize = factor_qubits.iter().sum();
    if rho.nrows() != 1 << total || rho.ncols() != rho.nrows() {
        return Err(Error::Config(format!(
            "matrix of size {} does not match {total} qubits",
            rho.nrows()
        )));
    }
    Ok(transpose_by_mask(rho, factor_mask(factor_qubits, factors)?))
}

/// Partial transpose over single-qubit factors of a density matrix.
pub fn partial_transpose(rho: &DensityMatrix, party_sites: &[usize]) -> Result<CMatrix> {
    let ones = vec![1; rho.n_sites()];
    partial_transpose_factors(rho.matrix(), &ones, party_sites)
}

fn negativity_of_matrix(pt: &CMatrix) -> f64 {
    let trace_norm: f64 = linalg::hermitian_eigenvalues(pt).iter().map(|l| l.abs()).sum();
    let n = 0.5 * (trace_norm - 1.0);
    if n < NEGATIVITY_TOL {
        0.0
    } else {
        n
    }
}

/// Negativity across `cut` for a state with single-qubit parties.
pub fn negativity(rho: &DensityMatrix, cut: &Bipartition) -> Result<f64> {
    let pt = partial_transpose(rho, cut.m1())?;
    Ok(negativity_of_matrix(&pt))
}

/// Negativity across `cut` for parties made of `party_qubits[p]` qubits each.
pub fn negativity_factors(rho: &DensityMatrix, party_qubits: &[usize], cut: &Bipartition) -> Result<f64> {
    let pt = partial_transpose_factors(rho.matrix(), party_qubits, cut.m1())?;
    Ok(negativity_of_matrix(&pt))
}

/// Negativity of a pure state across a cut from its Schmidt spectrum.
pub fn pure_state_negativity(schmidt_spectrum: &[f64]) -> f64 {
    let s: f64 = schmidt_spectrum.iter().map(|l| l.max(0.0).sqrt()).sum();
    let n = 0.5 * (s * s - 1.0);
    if n < NEGATIVITY_TOL {
        0.0
    } else {
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmnResult {
    /// GMN value, snapped to exactly 0 at or below [`GMN_ZERO_THRESHOLD`].
    pub value: f64,
    pub converged: bool,
    /// True when a PPT cut settled the value without an SDP solve.
    pub ppt_shortcut: bool,
    pub iterations: usize,
}

/// Interior-point Newton step budget for one GMN solve.
pub const GMN_MAX_NEWTON_STEPS: usize = 400;
/// Duality-gap target (in units of `‖ρ‖_F`) for the interior-point solve.
pub const GMN_GAP_TOL: f64 = 1e-7;

/// Reusable GMN solver for a fixed party structure.
///
/// Two equivalent formulations are kept. The primary one eliminates the
/// free witness through `W = P_1 + Q_1^{T_1}` and ties every other cut to it,
/// leaving only box-constrained blocks for the interior-point method. The
/// second keeps `W` as a free block and is solved by operator splitting; it
/// serves as an independent cross-check.
#[derive(Debug, Clone)]
pub struct GmnSolver {
    party_qubits: Vec<usize>,
    cuts: Vec<Bipartition>,
    masks: Vec<usize>,
    dim: usize,
    decomposition: SdpProblem,
    tol: f64,
    max_iter: usize,
}

/// Adds `sign_a·(P_a + Q_a^{T_a})` coordinate terms for one cut to `terms`.
fn push_cut_terms(
    spec: &crate::sdp::BlockSpec,
    p: usize,
    q: usize,
    mask: usize,
    i: usize,
    j: usize,
    part: Part,
    sign: f64,
    terms: &mut Vec<(Coordinate, f64)>,
) {
    let (cp, _) = spec.coordinate(i, j, part).expect("caller skips missing parts");
    let (a, b) = transposed_index(i, j, mask);
    let (cq, s) = spec.coordinate(a, b, part).expect("same diagonal structure");
    terms.push((Coordinate { block: p, index: cp }, sign));
    terms.push((Coordinate { block: q, index: cq }, sign * s));
}

impl GmnSolver {
    /// Solver for `k` single-qubit parties.
    pub fn new(k: usize) -> Result<Self> {
        Self::with_parties(&vec![1; k])
    }

    /// Solver for parties of the given qubit counts; the witness acts on
    /// `2^total` dimensions, at most 64.
    pub fn with_parties(party_qubits: &[usize]) -> Result<Self> {
        let k = party_qubits.len();
        if !(2..=4).contains(&k) || party_qubits.iter().any(|&q| q == 0) {
            return Err(Error::Config(format!("GMN needs 2..=4 nonempty parties, got {party_qubits:?}")));
        }
        let total: usize = party_qubits.iter().sum();
        if total > 6 {
            return Err(Error::Capacity(format!("GMN witness on {total} qubits exceeds dimension 64")));
        }
        let dim = 1usize << total;
        let cuts = Bipartition::enumerate(k);
        let masks: Vec<usize> =
            cuts.iter().map(|c| factor_mask(party_qubits, c.m1()).expect("in range")).collect();

        let mut problem = SdpProblem::new();
        let blocks: Vec<(usize, usize)> = masks
            .iter()
            .map(|_| {
                let p = problem.add_block(dim, Field::Complex, Cone::Box);
                let q = problem.add_block(dim, Field::Complex, Cone::Box);
                (p, q)
            })
            .collect();
        let spec = problem.blocks()[0];
        // P_0 + Q_0^{T_0} = P_m + Q_m^{T_m} for every other cut
        for (m, &mask) in masks.iter().enumerate().skip(1) {
            for i in 0..dim {
                for j in i..dim {
                    for part in [Part::Re, Part::Im] {
                        if spec.coordinate(i, j, part).is_none() {
                            continue;
                        }
                        let mut terms = Vec::with_capacity(4);
                        push_cut_terms(&spec, blocks[0].0, blocks[0].1, masks[0], i, j, part, 1.0, &mut terms);
                        push_cut_terms(&spec, blocks[m].0, blocks[m].1, mask, i, j, part, -1.0, &mut terms);
                        problem.add_coordinate_constraint(terms, 0.0);
                    }
                }
            }
        }
        Ok(Self {
            party_qubits: party_qubits.to_vec(),
            cuts,
            masks,
            dim,
            decomposition: problem,
            tol: GMN_GAP_TOL,
            max_iter: GMN_MAX_NEWTON_STEPS,
        })
    }

    pub fn with_tolerance(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    pub fn cuts(&self) -> &[Bipartition] {
        &self.cuts
    }

    pub fn party_qubits(&self) -> &[usize] {
        &self.party_qubits
    }

    /// Raw value `-min tr(ρW)` from the interior-point formulation, without
    /// the PPT shortcut or zero snapping. Returns `(value, converged, steps)`.
    pub fn solve_sdp(&self, rho: &CMatrix) -> (f64, bool, usize) {
        let mut problem = self.decomposition.clone();
        problem.set_objective(0, rho.clone());
        problem.set_objective(1, transpose_by_mask(rho, self.masks[0]));
        let half = CMatrix::identity(self.dim, self.dim) * Complex64::new(0.5, 0.0);
        let start = vec![half; 2 * self.masks.len()];
        let sol = solve_interior(&problem, &start, self.tol, self.max_iter).expect("start is strictly feasible");
        (-sol.objective, sol.status == SdpStatus::Optimal, sol.iterations)
    }

    /// Raw value from the operator-splitting formulation with a free witness.
    pub fn solve_sdp_splitting(&self, rho: &CMatrix, tol: f64, max_iter: usize) -> (f64, bool, usize) {
        let dim = self.dim;
        let mut problem = SdpProblem::new();
        let w = problem.add_block(dim, Field::Complex, Cone::Free);
        let spec = problem.blocks()[w];
        for &mask in &self.masks {
            let p = problem.add_block(dim, Field::Complex, Cone::Box);
            let q = problem.add_block(dim, Field::Complex, Cone::Box);
            for i in 0..dim {
                for j in i..dim {
                    for part in [Part::Re, Part::Im] {
                        let Some((cw, _)) = spec.coordinate(i, j, part) else { continue };
                        let mut terms = vec![(Coordinate { block: w, index: cw }, 1.0)];
                        push_cut_terms(&spec, p, q, mask, i, j, part, -1.0, &mut terms);
                        problem.add_coordinate_constraint(terms, 0.0);
                    }
                }
            }
        }
        problem.set_objective(w, rho.clone());
        let sol = problem.solve(tol, max_iter);
        (-sol.objective, sol.status == SdpStatus::Optimal, sol.iterations)
    }

    pub fn gmn(&self, rho: &DensityMatrix) -> Result<GmnResult> {
        if rho.dim() != self.dim {
            return Err(Error::Config(format!(
                "state of dimension {} does not match parties {:?}",
                rho.dim(),
                self.party_qubits
            )));
        }
        let m = rho.matrix();
        for &mask in &self.masks {
            let min_eig = linalg::hermitian_eigenvalues(&transpose_by_mask(m, mask))[0];
            if min_eig >= -PPT_TOL {
                // W = P + Q^T gives tr(ρW) ≥ 0 on a PPT cut, and W = 0 attains it
                return Ok(GmnResult { value: 0.0, converged: true, ppt_shortcut: true, iterations: 0 });
            }
        }
        let (raw, converged, iterations) = self.solve_sdp(m);
        let value = if raw <= GMN_ZERO_THRESHOLD { 0.0 } else { raw };
        Ok(GmnResult { value, converged, ppt_shortcut: false, iterations })
    }
}

/// GMN of a `k`-party state with single-qubit parties.
pub fn gmn(rho: &DensityMatrix, k: usize) -> Result<GmnResult> {
    if rho.n_sites() != k {
        return Err(Error::Config(format!("state has {} qubits, expected {k}", rho.n_sites())));
    }
    GmnSolver::new(k)?.gmn(rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CkwCheck {
    /// `N²` between `site_a` and the rest of the chain.
    pub lhs: f64,
    /// Sum of `N²` between `site_a` and every other single qubit.
    pub rhs: f64,
    pub holds: bool,
}

/// CKW monogamy check for one qubit of a pure state.
pub fn ckw_check(state: &StateVector, site_a: usize) -> Result<CkwCheck> {
    let n = state.n_qubits();
    if site_a >= n {
        return Err(Error::Config(format!("site {site_a} out of range for {n} qubits")));
    }
    let spectrum = state.reduced_spectrum(&[site_a])?;
    let lhs = pure_state_negativity(&spectrum).powi(2);
    let cut = Bipartition::new(2, &[0])?;
    let mut rhs = 0.0;
    for b in (0..n).filter(|&b| b != site_a) {
        let rho = state.reduced_density_matrix(&[site_a, b])?;
        rhs += negativity(&rho, &cut)?.powi(2);
    }
    Ok(CkwCheck { lhs, rhs, holds: lhs >= rhs - CKW_TOL })
}

/// `|GHZ_k⟩⟨GHZ_k|` helper used by tests and diagnostics.
pub fn ghz_density(k: usize) -> DensityMatrix {
    let d = 1usize << k;
    let mut amps = vec![Complex64::new(0.0, 0.0); d];
    amps[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[d - 1] = amps[0];
    DensityMatrix::from_pure(&amps).expect("normalized")
}
