//! Gate ensembles: the trapped-ion native Mølmer–Sørensen set and Haar U(4).

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::CMatrix;
use crate::statevector::GateMatrix;

/// Rotation axes of the discrete single-qubit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    /// `(x̂ + ŷ)/√2`
    XyDiag,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::XyDiag];
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(-iπ/4 n̂·σ) = (I - i n̂·σ)/√2`.
pub fn rotation_gate(axis: Axis) -> GateMatrix {
    let (nx, ny) = match axis {
        Axis::X => (1.0, 0.0),
        Axis::Y => (0.0, 1.0),
        Axis::XyDiag => (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    };
    let s = FRAC_1_SQRT_2;
    // n·σ = [[0, nx - i ny], [nx + i ny, 0]]
    let off01 = c(nx, -ny);
    let off10 = c(nx, ny);
    let minus_i = c(0.0, -1.0);
    GateMatrix::new(2, vec![c(s, 0.0), minus_i * off01 * s, minus_i * off10 * s, c(s, 0.0)])
}

/// The fixed-angle Mølmer–Sørensen gate `exp(-iπ/4 X⊗X) = (I - i X⊗X)/√2`.
pub fn ms_gate() -> GateMatrix {
    let s = FRAC_1_SQRT_2;
    let mut e = vec![c(0.0, 0.0); 16];
    for i in 0..4 {
        e[i * 4 + i] = c(s, 0.0);
        e[i * 4 + (3 - i)] = c(0.0, -s);
    }
    GateMatrix::new(4, e)
}

/// `M · (R(first) ⊗ R(second))`.
pub fn mms_gate(first: Axis, second: Axis) -> GateMatrix {
    ms_gate().matmul(&rotation_gate(first).kron(&rotation_gate(second)))
}

fn mms_table() -> &'static [GateMatrix; 9] {
    static TABLE: OnceLock<[GateMatrix; 9]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|k| mms_gate(Axis::ALL[k / 3], Axis::ALL[k % 3])))
}

/// Index in `0..9` of a uniformly drawn rotation pair (`first * 3 + second`).
pub fn sample_mms_index<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(0..9)
}

/// Gate for a rotation-pair index from [`sample_mms_index`].
pub fn mms_gate_by_index(index: usize) -> &'static GateMatrix {
    &mms_table()[index]
}

pub fn sample_mms_gate<R: Rng + ?Sized>(rng: &mut R) -> GateMatrix {
    mms_gate_by_index(sample_mms_index(rng)).clone()
}

/// `U^xx = M · (R^x ⊗ R^x)`; squares to the identity up to a phase.
pub fn u_xx_gate() -> GateMatrix {
    mms_gate(Axis::X, Axis::X)
}

/// Haar-random 4x4 unitary as a dense matrix.
pub fn haar_4x4<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    haar_unitary(4, rng)
}

/// Haar-random `dim × dim` unitary: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn sample_haar_gate<R: Rng + ?Sized>(rng: &mut R) -> GateMatrix {
    GateMatrix::from_matrix(&haar_4x4(rng))
}
