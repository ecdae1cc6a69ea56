//! Small dense semidefinite programs over Hermitian (or real symmetric)
//! matrix blocks, solved by ADMM operator splitting.
//!
//! Standard form:
//!
//! ```text
//! minimize    Σ_b tr(C_b X_b)
//! subject to  Σ_b tr(A_{ib} X_b) = r_i      for every equality i
//!             X_b ∈ K_b                     (free, PSD, or 0 ⪯ X_b ⪯ I)
//! ```
//!
//! Each block is vectorized isometrically (diagonal entries, then `√2 Re` and
//! `√2 Im` of the strict upper triangle), so Euclidean projections in
//! coordinates are Frobenius projections on matrices. The affine projection
//! is factored once per problem: rows of the constraint matrix are grouped
//! into connected components (rows sharing a coordinate), and each component's
//! Gram matrix gets its own small Cholesky factor.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::linalg::{self, CMatrix};

mod interior;
pub use interior::solve_interior;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 50_000;

const OVER_RELAXATION: f64 = 1.6;
const RHO_INIT: f64 = 1.0;
const RHO_UPDATE_EVERY: usize = 25;
const INFEASIBILITY_WINDOW: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Complex,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Free,
    Psd,
    /// `0 ⪯ X ⪯ I`
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    pub dim: usize,
    pub field: Field,
    pub cone: Cone,
}

impl BlockSpec {
    /// Number of real coordinates.
    pub fn len(&self) -> usize {
        match self.field {
            Field::Complex => self.dim * self.dim,
            Field::Real => self.dim * (self.dim + 1) / 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    fn stride(&self) -> usize {
        match self.field {
            Field::Complex => 2,
            Field::Real => 1,
        }
    }

    /// Coordinate of the strict upper-triangle pair `i < j`.
    fn pair_slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        // pairs are laid out row by row after the diagonal
        let before = i * self.dim - i * (i + 1) / 2;
        self.dim + self.stride() * (before + (j - i - 1))
    }

    /// Coordinate index and sign such that `coord * sign / scale` yields the
    /// requested part of `X[i][j]`.
    pub fn coordinate(&self, i: usize, j: usize, part: Part) -> Option<(usize, f64)> {
        if i == j {
            return match part {
                Part::Re => Some((i, 1.0)),
                Part::Im => None,
            };
        }
        let (a, b, conj) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let slot = self.pair_slot(a, b);
        match (part, self.field) {
            (Part::Re, _) => Some((slot, 1.0)),
            (Part::Im, Field::Complex) => Some((slot + 1, conj)),
            (Part::Im, Field::Real) => None,
        }
    }

    pub fn to_coords(&self, m: &CMatrix, out: &mut [f64]) {
        let s2 = std::f64::consts::SQRT_2;
        for i in 0..self.dim {
            out[i] = m[(i, i)].re;
            for j in (i + 1)..self.dim {
                let slot = self.pair_slot(i, j);
                let z = m[(i, j)];
                out[slot] = s2 * z.re;
                if self.field == Field::Complex {
                    out[slot + 1] = s2 * z.im;
                }
            }
        }
    }

    pub fn from_coords(&self, v: &[f64]) -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            m[(i, i)] = Complex64::new(v[i], 0.0);
            for j in (i + 1)..self.dim {
                let slot = self.pair_slot(i, j);
                let im = if self.field == Field::Complex { v[slot + 1] } else { 0.0 };
                let z = Complex64::new(v[slot] * h, im * h);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

/// A real coordinate of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Coordinate {
    pub block: usize,
    pub index: usize,
}

/// `Σ coeff · coordinate = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseConstraint {
    pub terms: Vec<(Coordinate, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    blocks: Vec<BlockSpec>,
    objective: Vec<Option<CMatrix>>,
    constraints: Vec<SparseConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub blocks: Vec<CMatrix>,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Lagrangian lower bound on the objective; exact for box-constrained
    /// blocks, restricted to a ball of radius `max(1, 2‖X_b‖)` for free and
    /// PSD blocks.
    pub dual_bound: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, dim: usize, field: Field, cone: Cone) -> usize {
        assert!(dim > 0);
        self.blocks.push(BlockSpec { dim, field, cone });
        self.objective.push(None);
        self.blocks.len() - 1
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn constraints(&self) -> &[SparseConstraint] {
        &self.constraints
    }

    /// Sets `C_b` (must be Hermitian).
    pub fn set_objective(&mut self, block: usize, c: CMatrix) {
        let spec = self.blocks[block];
        assert_eq!(c.nrows(), spec.dim);
        debug_assert!(linalg::hermiticity_error(&c) < 1e-10);
        self.objective[block] = Some(c);
    }

    pub fn clear_objective(&mut self) {
        for c in &mut self.objective {
            *c = None;
        }
    }

    /// `Σ_b tr(A_b X_b) = rhs` with Hermitian coefficient matrices.
    pub fn add_constraint(&mut self, terms: &[(usize, CMatrix)], rhs: f64) {
        let mut sparse = Vec::new();
        for (block, a) in terms {
            let spec = self.blocks[*block];
            debug_assert!(linalg::hermiticity_error(a) < 1e-10);
            let mut coords = vec![0.0; spec.len()];
            spec.to_coords(a, &mut coords);
            for (index, v) in coords.into_iter().enumerate() {
                if v != 0.0 {
                    sparse.push((Coordinate { block: *block, index }, v));
                }
            }
        }
        self.constraints.push(SparseConstraint { terms: sparse, rhs });
    }

    /// Adds a constraint directly on real coordinates.
    pub fn add_coordinate_constraint(&mut self, terms: Vec<(Coordinate, f64)>, rhs: f64) {
        self.constraints.push(SparseConstraint { terms, rhs });
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.blocks.len() + 1);
        let mut acc = 0;
        off.push(0);
        for b in &self.blocks {
            acc += b.len();
            off.push(acc);
        }
        off
    }

    pub fn solve(&self, tol: f64, max_iter: usize) -> SdpSolution {
        AdmmSolver::new(self).solve(self, tol, max_iter)
    }
}

/// Projection of a Hermitian matrix onto the PSD cone (eigenvalue clamp).
pub fn psd_project(h: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::hermitian_eigen(h);
    linalg::spectral_map(&vals, &vecs, |l| l.max(0.0))
}

/// Projection onto `{0 ⪯ X ⪯ I}`.
pub fn box_project(h: &CMatrix) -> CMatrix {
    let (vals, vecs) = linalg::hermitian_eigen(h);
    linalg::spectral_map(&vals, &vecs, |l| l.clamp(0.0, 1.0))
}

/// Factored affine projector `v ↦ v - Aᵀ(AAᵀ)⁺(Av - b)`.
struct AffineProjector {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    components: Vec<Component>,
}

struct Component {
    rows: Vec<usize>,
    solver: GramSolver,
}

enum GramSolver {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    /// Pseudo-inverse for redundant (rank-deficient) constraint groups.
    Pinv(DMatrix<f64>),
}

impl GramSolver {
    fn solve(&self, r: &DVector<f64>) -> DVector<f64> {
        match self {
            GramSolver::Cholesky(ch) => ch.solve(r),
            GramSolver::Pinv(p) => p * r,
        }
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl AffineProjector {
    fn new(n: usize, rows: Vec<Vec<(usize, f64)>>, rhs: Vec<f64>) -> Self {
        let m = rows.len();
        let mut parent: Vec<usize> = (0..m).collect();
        let mut owner: Vec<Option<usize>> = vec![None; n];
        for (r, row) in rows.iter().enumerate() {
            for &(c, _) in row {
                match owner[c] {
                    None => owner[c] = Some(r),
                    Some(o) => {
                        let (a, b) = (find(&mut parent, o), find(&mut parent, r));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for r in 0..m {
            let root = find(&mut parent, r);
            groups.entry(root).or_default().push(r);
        }
        let components = groups
            .into_values()
            .map(|rows_in| {
                let k = rows_in.len();
                let mut dense: Vec<std::collections::HashMap<usize, f64>> = Vec::with_capacity(k);
                for &r in &rows_in {
                    let mut map = std::collections::HashMap::new();
                    for &(c, v) in &rows[r] {
                        *map.entry(c).or_insert(0.0) += v;
                    }
                    dense.push(map);
                }
                let gram = DMatrix::from_fn(k, k, |a, b| {
                    let (small, big) = if dense[a].len() <= dense[b].len() {
                        (&dense[a], &dense[b])
                    } else {
                        (&dense[b], &dense[a])
                    };
                    small.iter().map(|(c, v)| v * big.get(c).copied().unwrap_or(0.0)).sum()
                });
                let scale = (0..k).map(|i| gram[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
                let solver = match gram.clone().cholesky() {
                    Some(ch) if (0..k).all(|i| ch.l()[(i, i)].powi(2) > 1e-12 * scale) => {
                        GramSolver::Cholesky(ch)
                    }
                    _ => {
                        let eig = gram.symmetric_eigen();
                        let cut = 1e-10 * scale;
                        let inv = DVector::from_iterator(
                            k,
                            eig.eigenvalues.iter().map(|&l| if l > cut { 1.0 / l } else { 0.0 }),
                        );
                        let v = &eig.eigenvectors;
                        GramSolver::Pinv(v * DMatrix::from_diagonal(&inv) * v.transpose())
                    }
                };
                Component { rows: rows_in, solver }
            })
            .collect();
        Self { n, rows, rhs, components }
    }

    fn apply_a(&self, v: &[f64], r: usize) -> f64 {
        self.rows[r].iter().map(|&(c, a)| a * v[c]).sum()
    }

    /// In-place projection onto `{Ax = b}` (or `{Ax = 0}` when `homogeneous`).
    fn project(&self, v: &mut [f64], homogeneous: bool) {
        for comp in &self.components {
            let resid = DVector::from_iterator(
                comp.rows.len(),
                comp.rows.iter().map(|&r| {
                    let b = if homogeneous { 0.0 } else { self.rhs[r] };
                    self.apply_a(v, r) - b
                }),
            );
            let y = comp.solver.solve(&resid);
            for (k, &r) in comp.rows.iter().enumerate() {
                for &(c, a) in &self.rows[r] {
                    v[c] -= a * y[k];
                }
            }
        }
    }

    fn max_violation(&self, v: &[f64]) -> f64 {
        (0..self.rows.len()).map(|r| (self.apply_a(v, r) - self.rhs[r]).abs()).fold(0.0, f64::max)
    }

    /// Component of `v` in the row space of `A`.
    fn range_part(&self, v: &[f64]) -> Vec<f64> {
        let mut null = v.to_vec();
        self.project(&mut null, true);
        v.iter().zip(&null).map(|(a, b)| a - b).collect()
    }
}

struct AdmmSolver {
    specs: Vec<BlockSpec>,
    offsets: Vec<usize>,
    affine: AffineProjector,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl AdmmSolver {
    fn new(problem: &SdpProblem) -> Self {
        let offsets = problem.offsets();
        let n = *offsets.last().unwrap();
        let mut rows = Vec::with_capacity(problem.constraints.len());
        let mut rhs = Vec::with_capacity(problem.constraints.len());
        for con in &problem.constraints {
            let row: Vec<(usize, f64)> =
                con.terms.iter().map(|(c, v)| (offsets[c.block] + c.index, *v)).collect();
            let s = norm(&row.iter().map(|(_, v)| *v).collect::<Vec<_>>());
            let s = if s > 0.0 { s } else { 1.0 };
            rows.push(row.into_iter().map(|(c, v)| (c, v / s)).collect());
            rhs.push(con.rhs / s);
        }
        let affine = AffineProjector::new(n, rows, rhs);
        Self { specs: problem.blocks.clone(), offsets, affine }
    }

    fn project_cone(&self, v: &mut [f64]) {
        for (b, spec) in self.specs.iter().enumerate() {
            let seg = &mut v[self.offsets[b]..self.offsets[b + 1]];
            let projected = match spec.cone {
                Cone::Free => continue,
                Cone::Psd => psd_project(&spec.from_coords(seg)),
                Cone::Box => box_project(&spec.from_coords(seg)),
            };
            spec.to_coords(&projected, seg);
        }
    }

    /// `min_{z ∈ K_b, ‖z‖ ≤ radius} ⟨s, z⟩` for one block.
    fn cone_support_min(spec: &BlockSpec, s: &[f64], radius: f64) -> f64 {
        match spec.cone {
            Cone::Free => -radius * norm(s),
            Cone::Psd => {
                let vals = linalg::hermitian_eigenvalues(&spec.from_coords(s));
                let neg = vals.iter().filter(|&&l| l < 0.0).map(|l| l * l).sum::<f64>().sqrt();
                -radius * neg
            }
            Cone::Box => {
                linalg::hermitian_eigenvalues(&spec.from_coords(s)).iter().map(|&l| l.min(0.0)).sum()
            }
        }
    }

    fn objective_vector(&self, problem: &SdpProblem) -> Vec<f64> {
        let mut c = vec![0.0; self.affine.n];
        for (b, spec) in self.specs.iter().enumerate() {
            if let Some(cm) = &problem.objective[b] {
                spec.to_coords(cm, &mut c[self.offsets[b]..self.offsets[b + 1]]);
            }
        }
        c
    }

    /// Checks whether `direction` separates the affine set from the cone.
    fn certifies_infeasibility(&self, direction: &[f64]) -> bool {
        let v = self.affine.range_part(direction);
        let scale = norm(&v);
        if scale == 0.0 {
            return false;
        }
        let mut x0 = vec![0.0; self.affine.n];
        self.affine.project(&mut x0, false);
        let aff_sup = dot(&v, &x0);
        let mut cone_inf = 0.0;
        for (b, spec) in self.specs.iter().enumerate() {
            let seg = &v[self.offsets[b]..self.offsets[b + 1]];
            match spec.cone {
                Cone::Free if norm(seg) > 1e-9 * scale => return false,
                Cone::Psd => {
                    let vals = linalg::hermitian_eigenvalues(&spec.from_coords(seg));
                    if vals.first().copied().unwrap_or(0.0) < -1e-9 * scale {
                        return false;
                    }
                }
                Cone::Box => cone_inf += Self::cone_support_min(spec, seg, 0.0),
                Cone::Free => {}
            }
        }
        cone_inf > aff_sup + 1e-7 * scale
    }

    fn solve(&self, problem: &SdpProblem, tol: f64, max_iter: usize) -> SdpSolution {
        let n = self.affine.n;
        let c_raw = self.objective_vector(problem);
        let c_norm = norm(&c_raw);
        let c_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
        let c: Vec<f64> = c_raw.iter().map(|v| v / c_scale).collect();

        // inconsistent equalities cannot be repaired by any cone point
        let mut x0 = vec![0.0; n];
        self.affine.project(&mut x0, false);
        if self.affine.max_violation(&x0) > 1e-8 {
            return self.finish(x0.clone(), 0.0, f64::INFINITY, 0, SdpStatus::Infeasible, c_scale, &c);
        }

        let mut z = vec![0.0; n];
        let mut u = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut z_prev = vec![0.0; n];
        let mut rho = RHO_INIT;
        let mut r_prim = f64::INFINITY;
        let mut r_dual = f64::INFINITY;
        let mut history: Vec<f64> = Vec::new();

        for iter in 1..=max_iter {
            for i in 0..n {
                x[i] = z[i] - u[i] - c[i] / rho;
            }
            self.affine.project(&mut x, false);
            z_prev.copy_from_slice(&z);
            let mut xh = vec![0.0; n];
            for i in 0..n {
                xh[i] = OVER_RELAXATION * x[i] + (1.0 - OVER_RELAXATION) * z_prev[i];
                z[i] = xh[i] + u[i];
            }
            self.project_cone(&mut z);
            for i in 0..n {
                u[i] += xh[i] - z[i];
            }
            r_prim = norm(&x.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>());
            r_dual = rho * norm(&z.iter().zip(&z_prev).map(|(a, b)| a - b).collect::<Vec<_>>());

            if r_prim <= tol && r_dual <= tol {
                return self.finish(z, r_prim, r_dual, iter, SdpStatus::Optimal, c_scale, &c).with_dual(self, &u, rho, &c, c_scale);
            }

            if iter % RHO_UPDATE_EVERY == 0 {
                if r_prim > 10.0 * r_dual {
                    rho *= 2.0;
                    u.iter_mut().for_each(|v| *v *= 0.5);
                } else if r_dual > 10.0 * r_prim {
                    rho *= 0.5;
                    u.iter_mut().for_each(|v| *v *= 2.0);
                }
                history.push(r_prim);
                let w = INFEASIBILITY_WINDOW / RHO_UPDATE_EVERY;
                if history.len() > w {
                    let old = history[history.len() - 1 - w];
                    if r_prim > 1e3 * tol && r_prim > 0.99 * old {
                        let dir: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
                        if self.certifies_infeasibility(&dir) {
                            return self.finish(z, r_prim, r_dual, iter, SdpStatus::Infeasible, c_scale, &c);
                        }
                    }
                }
            }
        }
        self.finish(z, r_prim, r_dual, max_iter, SdpStatus::MaxIter, c_scale, &c)
            .with_dual(self, &u, rho, &c, c_scale)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        z: Vec<f64>,
        r_prim: f64,
        r_dual: f64,
        iterations: usize,
        status: SdpStatus,
        c_scale: f64,
        c: &[f64],
    ) -> SdpSolution {
        let objective = dot(c, &z) * c_scale;
        let blocks = self
            .specs
            .iter()
            .enumerate()
            .map(|(b, spec)| spec.from_coords(&z[self.offsets[b]..self.offsets[b + 1]]))
            .collect();
        SdpSolution {
            blocks,
            objective,
            primal_residual: r_prim,
            dual_residual: r_dual,
            dual_bound: f64::NEG_INFINITY,
            iterations,
            status,
        }
    }
}

impl SdpSolution {
    /// Lagrangian bound `g(y) = bᵀλ + Σ_b min_{z∈K_b} ⟨-y_b, z⟩` at the ADMM
    /// multiplier, after moving `c + y` into the row space of `A`.
    fn with_dual(mut self, solver: &AdmmSolver, u: &[f64], rho: f64, c: &[f64], c_scale: f64) -> Self {
        let n = c.len();
        let cy: Vec<f64> = (0..n).map(|i| c[i] + rho * u[i]).collect();
        let cy_range = solver.affine.range_part(&cy);
        let y: Vec<f64> = (0..n).map(|i| cy_range[i] - c[i]).collect();
        let mut x0 = vec![0.0; n];
        solver.affine.project(&mut x0, false);
        let mut bound = dot(&cy_range, &x0);
        for (b, spec) in solver.specs.iter().enumerate() {
            let seg: Vec<f64> = y[solver.offsets[b]..solver.offsets[b + 1]].iter().map(|v| -v).collect();
            let mut zb = vec![0.0; spec.len()];
            spec.to_coords(&self.blocks[b], &mut zb);
            let radius = (2.0 * norm(&zb)).max(1.0);
            bound += AdmmSolver::cone_support_min(spec, &seg, radius);
        }
        self.dual_bound = bound * c_scale;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_diag(d: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = c(*v, 0.0);
        }
        m
    }

    fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
        let a = CMatrix::from_fn(dim, dim, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut h = &a + a.adjoint();
        linalg::hermitize(&mut h);
        h
    }

    fn min_eig_problem(cm: CMatrix, field: Field) -> SdpProblem {
        let d = cm.nrows();
        let mut p = SdpProblem::new();
        let b = p.add_block(d, field, Cone::Psd);
        p.set_objective(b, cm);
        p.add_constraint(&[(b, CMatrix::identity(d, d))], 1.0);
        p
    }

    #[test]
    fn coordinates_are_isometric_and_invertible() {
        let mut rng = seeded(1);
        for field in [Field::Complex, Field::Real] {
            let spec = BlockSpec { dim: 5, field, cone: Cone::Free };
            let mut h = random_hermitian(5, &mut rng);
            if field == Field::Real {
                h = h.map(|z| c(z.re, 0.0));
            }
            let mut v = vec![0.0; spec.len()];
            spec.to_coords(&h, &mut v);
            assert!((norm(&v) - h.norm()).abs() < 1e-12);
            assert!((spec.from_coords(&v) - &h).norm() < 1e-14);
            for i in 0..5 {
                for j in 0..5 {
                    let (k, s) = spec.coordinate(i, j, Part::Re).unwrap();
                    let scale = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                    assert!((v[k] * s / scale - h[(i, j)].re).abs() < 1e-14);
                    if let Some((k, s)) = spec.coordinate(i, j, Part::Im) {
                        assert!((v[k] * s / scale - h[(i, j)].im).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn psd_project_examples() {
        let d = real_diag(&[2.0, -1.0]);
        assert!((psd_project(&d) - real_diag(&[2.0, 0.0])).norm() < 1e-14);
        let mut rng = seeded(2);
        let a = CMatrix::from_fn(4, 4, |_, _| c(rng.random::<f64>(), rng.random::<f64>()));
        let psd = &a * a.adjoint();
        assert!((psd_project(&psd) - &psd).norm() < 1e-12);
        let h = random_hermitian(4, &mut rng);
        let p = psd_project(&h);
        assert!((psd_project(&p) - &p).norm() < 1e-12);
    }

    #[test]
    fn psd_projection_is_frobenius_nearest() {
        // any PSD candidate must be at least as far from H as the projection
        let mut rng = seeded(3);
        for _ in 0..20 {
            let h = random_hermitian(3, &mut rng);
            let p = psd_project(&h);
            let best = (&h - &p).norm();
            for _ in 0..200 {
                let a = CMatrix::from_fn(3, 3, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let cand = &p + &a * a.adjoint() * c(0.05, 0.0);
                assert!((&h - cand).norm() >= best - 1e-12);
            }
        }
    }

    #[test]
    fn minimum_eigenvalue_diag() {
        let p = min_eig_problem(real_diag(&[3.0, 1.0, 2.0]), Field::Complex);
        let s = p.solve(DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-6);
        assert!((s.blocks[0][(1, 1)].re - 1.0).abs() < 1e-5);
        assert!(s.primal_residual <= DEFAULT_TOL && s.dual_residual <= DEFAULT_TOL);
    }

    #[test]
    fn degenerate_optimum_identity_cost() {
        let p = min_eig_problem(CMatrix::identity(2, 2), Field::Complex);
        let s = p.solve(DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn random_minimum_eigenvalue_and_weak_duality() {
        let mut rng = seeded(4);
        for _ in 0..10 {
            let h = random_hermitian(4, &mut rng);
            let lmin = linalg::hermitian_eigenvalues(&h)[0];
            let s = min_eig_problem(h, Field::Complex).solve(DEFAULT_TOL, DEFAULT_MAX_ITER);
            assert_eq!(s.status, SdpStatus::Optimal);
            assert!((s.objective - lmin).abs() < 1e-6, "{} vs {lmin}", s.objective);
            assert!(s.objective >= s.dual_bound - 10.0 * DEFAULT_TOL);
            assert!((s.dual_bound - lmin).abs() < 1e-4);
        }
    }

    #[test]
    fn real_embedding_matches_complex_solve() {
        let mut rng = seeded(5);
        for _ in 0..5 {
            let h = random_hermitian(3, &mut rng);
            let native = min_eig_problem(h.clone(), Field::Complex).solve(DEFAULT_TOL, DEFAULT_MAX_ITER);
            let d = h.nrows();
            let emb = CMatrix::from_fn(2 * d, 2 * d, |i, j| {
                let z = h[(i % d, j % d)];
                let v = match (i < d, j < d) {
                    (true, true) | (false, false) => z.re,
                    (true, false) => -z.im,
                    (false, true) => z.im,
                };
                c(v, 0.0)
            });
            let real = min_eig_problem(emb, Field::Real).solve(DEFAULT_TOL, DEFAULT_MAX_ITER);
            assert!((native.objective - real.objective).abs() < 10.0 * DEFAULT_TOL * 10.0);
        }
    }

    #[test]
    fn solves_are_deterministic() {
        let mut rng = seeded(6);
        let h = random_hermitian(4, &mut rng);
        let a = min_eig_problem(h.clone(), Field::Complex).solve(DEFAULT_TOL, 1000);
        let b = min_eig_problem(h, Field::Complex).solve(DEFAULT_TOL, 1000);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.blocks, b.blocks);
    }

    #[test]
    fn box_cone_and_free_block() {
        // minimize tr(C W) with W = P, 0 ⪯ P ⪯ I: optimum is the sum of negative eigenvalues
        let cm = real_diag(&[-0.5, 0.25, -0.125]);
        let mut p = SdpProblem::new();
        let w = p.add_block(3, Field::Complex, Cone::Free);
        let q = p.add_block(3, Field::Complex, Cone::Box);
        p.set_objective(w, cm);
        let spec = p.blocks()[w];
        for k in 0..spec.len() {
            p.add_coordinate_constraint(
                vec![(Coordinate { block: w, index: k }, 1.0), (Coordinate { block: q, index: k }, -1.0)],
                0.0,
            );
        }
        let s = p.solve(DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective + 0.625).abs() < 1e-6);
        assert!(s.objective >= s.dual_bound - 10.0 * DEFAULT_TOL);
    }

    #[test]
    fn infeasible_trace_is_detected() {
        let mut p = SdpProblem::new();
        let b = p.add_block(2, Field::Complex, Cone::Psd);
        p.set_objective(b, CMatrix::identity(2, 2));
        p.add_constraint(&[(b, CMatrix::identity(2, 2))], -1.0);
        let s = p.solve(DEFAULT_TOL, 20_000);
        assert_eq!(s.status, SdpStatus::Infeasible);
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let mut p = SdpProblem::new();
        let b = p.add_block(2, Field::Complex, Cone::Psd);
        p.add_constraint(&[(b, CMatrix::identity(2, 2))], 1.0);
        p.add_constraint(&[(b, CMatrix::identity(2, 2))], 2.0);
        assert_eq!(p.solve(DEFAULT_TOL, 100).status, SdpStatus::Infeasible);
    }

    #[test]
    fn max_iter_reports_residuals() {
        let mut rng = seeded(7);
        let h = random_hermitian(6, &mut rng);
        let s = min_eig_problem(h, Field::Complex).solve(1e-14, 3);
        assert_eq!(s.status, SdpStatus::MaxIter);
        assert_eq!(s.iterations, 3);
        assert!(s.primal_residual.is_finite() && s.dual_residual.is_finite());
    }
}
