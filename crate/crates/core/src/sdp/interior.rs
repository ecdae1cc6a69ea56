//! Feasible-start log-barrier interior-point method for problems whose blocks
//! are all PSD or box-constrained.
//!
//! The barrier `-log det X` (plus `-log det(I - X)` for box blocks) has a
//! block-diagonal Hessian, so each equality-constrained Newton step reduces
//! to a Schur complement `A H⁻¹ Aᵀ` assembled from the sparse constraint rows.
//! On the central path the duality gap is exactly `ν / t`, with `ν` the total
//! barrier parameter, which gives both the stopping rule and the dual bound.

use nalgebra::{DMatrix, DVector};

use num_complex::Complex64;

use super::{dot, BlockSpec, Cone, SdpProblem, SdpSolution, SdpStatus};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

const BARRIER_GROWTH: f64 = 20.0;
/// Squared Newton decrement at which a point counts as centered.
const CENTERING_TOL: f64 = 1e-10;
const ROUNDOFF_FACTOR: f64 = 8.0;
const MAX_CENTERING_STEPS: usize = 60;
const ARMIJO: f64 = 0.01;
/// Squared Newton decrement below which full steps are safe for a
/// self-concordant barrier.
const QUADRATIC_REGION: f64 = 0.1;

struct Layout {
    specs: Vec<BlockSpec>,
    offsets: Vec<usize>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    /// Rows touching each block, as `(row, local coordinate, coefficient)`.
    block_terms: Vec<Vec<(usize, usize, f64)>>,
}

impl Layout {
    fn new(problem: &SdpProblem) -> Self {
        let offsets = problem.offsets();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut block_terms = vec![Vec::new(); problem.blocks.len()];
        for (r, con) in problem.constraints.iter().enumerate() {
            let s = con.terms.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            let s = if s > 0.0 { s } else { 1.0 };
            let row: Vec<(usize, f64)> =
                con.terms.iter().map(|(c, v)| (offsets[c.block] + c.index, v / s)).collect();
            for (c, v) in &con.terms {
                block_terms[c.block].push((r, c.index, v / s));
            }
            rows.push(row);
            rhs.push(con.rhs / s);
        }
        Self { specs: problem.blocks.clone(), offsets, rows, rhs, block_terms }
    }

    fn n(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn segment<'a>(&self, v: &'a [f64], b: usize) -> &'a [f64] {
        &v[self.offsets[b]..self.offsets[b + 1]]
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| b - row.iter().map(|&(c, a)| a * x[c]).sum::<f64>())
            .collect()
    }

    fn barrier_parameter(&self) -> f64 {
        self.specs
            .iter()
            .map(|s| match s.cone {
                Cone::Box => 2.0 * s.dim as f64,
                _ => s.dim as f64,
            })
            .sum()
    }

    /// Barrier value `-Σ log det` at `x`, or `None` outside the interior.
    fn barrier(&self, x: &[f64]) -> Option<f64> {
        let mut total = 0.0;
        for (b, spec) in self.specs.iter().enumerate() {
            let m = spec.from_coords(self.segment(x, b));
            total -= linalg::hermitian_log_det(&m)?;
            if spec.cone == Cone::Box {
                total -= linalg::hermitian_log_det(&(CMatrix::identity(spec.dim, spec.dim) - &m))?;
            }
        }
        Some(total)
    }
}

/// Gradient and inverse Hessian of one block's barrier in coordinates.
///
/// `X` and `I - X` share eigenvectors, so in the eigenbasis of `X` the
/// Hessian acts entrywise: `Ẽ_ij ↦ h_ij Ẽ_ij` with
/// `h_ij = 1/(d_i d_j) [+ 1/((1-d_i)(1-d_j)) for box blocks]`.
fn block_derivatives(spec: &BlockSpec, x: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = spec.from_coords(x);
    let (vals, vecs) = linalg::hermitian_eigen(&m);
    let d = spec.dim;
    let is_box = spec.cone == Cone::Box;
    let mut grad = vec![0.0; spec.len()];
    let gm = linalg::spectral_map(&vals, &vecs, |l| if is_box { -1.0 / l + 1.0 / (1.0 - l) } else { -1.0 / l });
    spec.to_coords(&gm, &mut grad);

    let hinv_entry = |i: usize, j: usize| {
        let (a, b) = (vals[i], vals[j]);
        let h = 1.0 / (a * b) + if is_box { 1.0 / ((1.0 - a) * (1.0 - b)) } else { 0.0 };
        1.0 / h
    };
    let scale = CMatrix::from_fn(d, d, |i, j| Complex64::new(hinv_entry(i, j), 0.0));
    let len = spec.len();
    let mut hinv = DMatrix::<f64>::zeros(len, len);
    let mut unit = vec![0.0; len];
    let mut col = vec![0.0; len];
    let vt = vecs.adjoint();
    for l in 0..len {
        unit[l] = 1.0;
        let e = spec.from_coords(&unit);
        unit[l] = 0.0;
        let rotated = (&vt * e * &vecs).component_mul(&scale);
        let back = &vecs * rotated * &vt;
        spec.to_coords(&back, &mut col);
        hinv.set_column(l, &DVector::from_column_slice(&col));
    }
    let hinv = (&hinv + hinv.transpose()) * 0.5;
    (grad, hinv)
}

/// Minimizes `Σ tr(C_b X_b)` over the interior of the cones subject to the
/// equalities, starting from a strictly feasible `initial` point.
///
/// `max_iter` bounds the total number of Newton steps.
pub fn solve_interior(problem: &SdpProblem, initial: &[CMatrix], tol: f64, max_iter: usize) -> Result<SdpSolution> {
    if problem.blocks.iter().any(|b| b.cone == Cone::Free) {
        return Err(Error::Config("interior-point solve needs every block in a PSD or box cone".into()));
    }
    if initial.len() != problem.blocks.len() {
        return Err(Error::Config("initial point has the wrong number of blocks".into()));
    }
    let layout = Layout::new(problem);
    let n = layout.n();
    let m = layout.rows.len();

    let mut x = vec![0.0; n];
    for (b, spec) in layout.specs.iter().enumerate() {
        if initial[b].nrows() != spec.dim {
            return Err(Error::Config(format!("initial block {b} has the wrong dimension")));
        }
        spec.to_coords(&initial[b], &mut x[layout.offsets[b]..layout.offsets[b + 1]]);
    }
    if layout.barrier(&x).is_none() {
        return Err(Error::Config("initial point is not strictly inside the cones".into()));
    }
    if layout.residual(&x).iter().any(|r| r.abs() > 1e-9) {
        return Err(Error::Config("initial point violates the equality constraints".into()));
    }

    let mut c = vec![0.0; n];
    for (b, spec) in layout.specs.iter().enumerate() {
        if let Some(cm) = &problem.objective[b] {
            spec.to_coords(cm, &mut c[layout.offsets[b]..layout.offsets[b + 1]]);
        }
    }
    let c_norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
    c.iter_mut().for_each(|v| *v /= c_scale);

    let nu = layout.barrier_parameter();
    let mut t = 1.0;
    let mut newton_steps = 0;
    let mut status = SdpStatus::MaxIter;
    // last point certified as centered, with its barrier weight
    let mut centered: Option<(Vec<f64>, f64)> = None;

    'outer: loop {
        let mut is_centered = false;
        for _ in 0..MAX_CENTERING_STEPS {
            if newton_steps >= max_iter {
                break 'outer;
            }
            let sys = newton_direction(&layout, &c, t, &x, m);
            let (dx, lambda_sq) = (&sys.dx, sys.lambda_sq);
            newton_steps += 1;
            if lambda_sq <= centering_threshold(t) {
                let trial = sys.restore_feasibility(&layout, &x);
                if layout.barrier(&trial).is_some() {
                    x = trial;
                }
                is_centered = true;
                break;
            }
            let f0 = t * dot(&c, &x) + layout.barrier(&x).expect("iterates stay interior");
            let mut step = 1.0;
            let mut trial = vec![0.0; n];
            let accepted = loop {
                for i in 0..n {
                    trial[i] = x[i] + step * dx[i];
                }
                if let Some(phi) = layout.barrier(&trial) {
                    // inside the quadratic-convergence region a feasible full
                    // step is accepted; f itself is too large to compare there
                    if lambda_sq < QUADRATIC_REGION {
                        break true;
                    }
                    if t * dot(&c, &trial) + phi <= f0 - ARMIJO * step * lambda_sq {
                        break true;
                    }
                }
                step *= 0.5;
                if step < 1e-14 {
                    break false;
                }
            };
            if !accepted {
                break;
            }
            // roundoff in the large `t·c` terms lets `Ax` drift off `b`
            let restored = sys.restore_feasibility(&layout, &trial);
            if layout.barrier(&restored).is_some() {
                x = restored;
            } else {
                x.copy_from_slice(&trial);
            }
        }
        if !is_centered {
            // roundoff stalls centering; fall back to the last certified point
            break;
        }
        centered = Some((x.clone(), t));
        if nu / t <= tol {
            status = SdpStatus::Optimal;
            break;
        }
        t *= BARRIER_GROWTH;
    }
    if status != SdpStatus::Optimal {
        if let Some((xc, tc)) = centered {
            x = xc;
            t = tc;
        }
    }

    let primal_residual = layout.residual(&x).iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let gap = nu / t;
    let objective = dot(&c, &x) * c_scale;
    let blocks = layout
        .specs
        .iter()
        .enumerate()
        .map(|(b, spec)| spec.from_coords(layout.segment(&x, b)))
        .collect();
    let status = if status == SdpStatus::Optimal && primal_residual > tol { SdpStatus::MaxIter } else { status };
    Ok(SdpSolution {
        blocks,
        objective,
        primal_residual,
        dual_residual: gap,
        dual_bound: objective - gap * c_scale,
        iterations: newton_steps,
        status,
    })
}

/// Squared decrement accepted as centered at barrier weight `t`.
///
/// The gradient carries `t·c` with `|c| = 1`, so roundoff alone leaves a
/// decrement of order `(ε t)²`; demanding less than that never terminates.
fn centering_threshold(t: f64) -> f64 {
    CENTERING_TOL.max((ROUNDOFF_FACTOR * f64::EPSILON * t).powi(2))
}

/// Equality-constrained Newton system at one iterate.
struct NewtonSystem {
    hinv: Vec<DMatrix<f64>>,
    schur: Option<SchurSolve>,
    dx: Vec<f64>,
    lambda_sq: f64,
}

enum SchurSolve {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Pseudo(DMatrix<f64>),
}

impl SchurSolve {
    fn solve(&self, v: DVector<f64>) -> DVector<f64> {
        match self {
            Self::Cholesky(ch) => ch.solve(&v),
            Self::Pseudo(p) => p * v,
        }
    }
}

impl NewtonSystem {
    fn apply_hinv(&self, layout: &Layout, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (b, inv) in self.hinv.iter().enumerate() {
            let seg = DVector::from_column_slice(layout.segment(v, b));
            out[layout.offsets[b]..layout.offsets[b + 1]].copy_from_slice((inv * seg).as_slice());
        }
        out
    }

    /// `-H⁻¹(v + Aᵀ w)` with `w` chosen so that `A` maps the result to `target`,
    /// plus one round of iterative refinement.
    fn constrained_solve(&self, layout: &Layout, v: &[f64], target: &[f64]) -> Vec<f64> {
        let Some(schur) = &self.schur else {
            return self.apply_hinv(layout, v).into_iter().map(|x| -x).collect();
        };
        let m = layout.rows.len();
        let apply_a = |u: &[f64]| -> Vec<f64> {
            layout.rows.iter().map(|row| row.iter().map(|&(col, a)| a * u[col]).sum()).collect()
        };
        let step_for = |w: &[f64]| {
            let mut rhs = v.to_vec();
            for (row, wr) in layout.rows.iter().zip(w) {
                for &(col, a) in row {
                    rhs[col] += a * wr;
                }
            }
            self.apply_hinv(layout, &rhs).into_iter().map(|x| -x).collect::<Vec<f64>>()
        };
        let hv = apply_a(&self.apply_hinv(layout, v));
        let rhs = DVector::from_iterator(m, hv.iter().zip(target).map(|(a, t)| -a - t));
        let mut w = schur.solve(rhs).as_slice().to_vec();
        let dx = step_for(&w);
        let err = DVector::from_iterator(m, apply_a(&dx).iter().zip(target).map(|(a, t)| t - a));
        let dw = schur.solve(err);
        for (wi, d) in w.iter_mut().zip(dw.iter()) {
            *wi -= d;
        }
        step_for(&w)
    }

    /// Minimal-norm (in the `H` metric) shift restoring `Ax = b` at `x`.
    fn restore_feasibility(&self, layout: &Layout, x: &[f64]) -> Vec<f64> {
        let r = layout.residual(x);
        let zero = vec![0.0; x.len()];
        let d = self.constrained_solve(layout, &zero, &r);
        x.iter().zip(&d).map(|(a, b)| a + b).collect()
    }
}

/// Newton step for `t·cᵀx + φ(x)` on the null space of the equalities,
/// together with the data needed to project back onto them.
fn newton_direction(layout: &Layout, c: &[f64], t: f64, x: &[f64], m: usize) -> NewtonSystem {
    let n = layout.n();
    let mut g = vec![0.0; n];
    let mut hinv: Vec<DMatrix<f64>> = Vec::with_capacity(layout.specs.len());
    for (b, spec) in layout.specs.iter().enumerate() {
        let (grad, inv) = block_derivatives(spec, layout.segment(x, b));
        let off = layout.offsets[b];
        for (k, gk) in grad.iter().enumerate() {
            g[off + k] = gk + t * c[off + k];
        }
        hinv.push(inv);
    }
    let schur = (m > 0).then(|| {
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for (b, terms) in layout.block_terms.iter().enumerate() {
            let inv = &hinv[b];
            for &(r, i, a) in terms {
                for &(s, j, bb) in terms {
                    schur[(r, s)] += a * bb * inv[(i, j)];
                }
            }
        }
        match schur.clone().cholesky() {
            Some(ch) => SchurSolve::Cholesky(ch),
            None => SchurSolve::Pseudo(schur.pseudo_inverse(1e-12).expect("symmetric schur complement")),
        }
    });
    let mut sys = NewtonSystem { hinv, schur, dx: Vec::new(), lambda_sq: 0.0 };
    let dx = sys.constrained_solve(layout, &g, &vec![0.0; m]);
    // on the null space of A, dxᵀ H dx = -gᵀ dx
    sys.lambda_sq = (-dot(&g, &dx)).max(0.0);
    sys.dx = dx;
    sys
}
