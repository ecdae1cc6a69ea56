//! Small dense Hermitian helpers shared by the entropy, negativity and SDP code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        2 => {
            let a = m[(0, 0)].re;
            let d = m[(1, 1)].re;
            let b = m[(0, 1)];
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            vec![mean - rad, mean + rad]
        }
        _ => {
            let fast: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
            if spectrum_is_sound(&fast, m) {
                fast
            } else {
                let (s, _, shift) = conditioned(m);
                s.symmetric_eigenvalues().iter().map(|v| v - shift).collect()
            }
        }
    };
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Fixed Householder reflection `I - 2vv†` with `v` the uniform unit vector.
fn scrambler(n: usize) -> CMatrix {
    let w = Complex64::new(2.0 / n as f64, 0.0);
    CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) - w } else { -w })
}

/// nalgebra's Hermitian QR sweep can return NaN and -inf on very sparse
/// input with exact zeros (seen on reduced states of monitored circuits).
/// A fixed unitary similarity spreads the zero pattern and a shift by the
/// Frobenius norm removes the zero diagonal; returns the transformed matrix,
/// the reflection and the shift.
fn conditioned(m: &CMatrix) -> (CMatrix, CMatrix, f64) {
    let n = m.nrows();
    let h = scrambler(n);
    let shift = m.norm();
    let s = &h * m * &h + CMatrix::identity(n, n) * Complex64::new(shift, 0.0);
    (s, h, shift)
}

/// Finite values whose sum matches the trace.
fn spectrum_is_sound(vals: &[f64], m: &CMatrix) -> bool {
    let tr = trace(m).re;
    vals.iter().all(|v| v.is_finite()) && (vals.iter().sum::<f64>() - tr).abs() <= 1e-9 * (1.0 + m.norm())
}

/// Full eigendecomposition `m = V diag(λ) V†` of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    if spectrum_is_sound(eig.eigenvalues.as_slice(), m) && eig.eigenvectors.iter().all(|z| z.is_finite()) {
        return (eig.eigenvalues, eig.eigenvectors);
    }
    let (s, h, shift) = conditioned(m);
    let eig = s.symmetric_eigen();
    (eig.eigenvalues.map(|v| v - shift), h * eig.eigenvectors)
}

/// Rebuilds `V diag(f(λ)) V†`.
pub fn spectral_map(vals: &DVector<f64>, vecs: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for j in 0..n {
        let s = f(vals[j]);
        scaled.column_mut(j).scale_mut(s);
    }
    let mut out = &scaled * vecs.adjoint();
    hermitize(&mut out);
    out
}

/// Replaces `m` by `(m + m†)/2`.
pub fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Frobenius inner product `Re tr(a† b)`.
pub fn frobenius_dot(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Cholesky factor `L` (lower, real positive diagonal) of a Hermitian
/// positive-definite matrix, reading only the lower triangle. Returns `None`
/// unless every pivot is strictly positive.
pub fn hermitian_cholesky(m: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / d;
        }
    }
    Some(l)
}

/// `log det M` for Hermitian positive-definite `M`, or `None` otherwise.
pub fn hermitian_log_det(m: &CMatrix) -> Option<f64> {
    let l = hermitian_cholesky(m)?;
    Some(2.0 * (0..m.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// `(log det M, M⁻¹)` for Hermitian positive-definite `M`, or `None` if `M`
/// is not positive definite.
pub fn hermitian_log_det_inverse(m: &CMatrix) -> Option<(f64, CMatrix)> {
    let l = hermitian_cholesky(m)?;
    let n = m.nrows();
    let log_det = 2.0 * (0..n).map(|i| l[(i, i)].re.ln()).sum::<f64>();
    // L⁻¹ by forward substitution, then M⁻¹ = L⁻ᴴ L⁻¹
    let mut linv = CMatrix::zeros(n, n);
    for c in 0..n {
        linv[(c, c)] = Complex64::new(1.0 / l[(c, c)].re, 0.0);
        for i in (c + 1)..n {
            let mut v = Complex64::new(0.0, 0.0);
            for k in c..i {
                v -= l[(i, k)] * linv[(k, c)];
            }
            linv[(i, c)] = v / l[(i, i)].re;
        }
    }
    let mut inv = linv.adjoint() * linv;
    hermitize(&mut inv);
    Some((log_det, inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditioned_form_preserves_decomposition() {
        let m = CMatrix::from_fn(6, 6, |i, j| {
            let re = 1.0 / (1.0 + (i + j) as f64);
            let im = 0.1 * (i as f64 - j as f64);
            Complex64::new(re, im)
        });
        let (s, h, shift) = conditioned(&m);
        assert!(((&h * &h) - CMatrix::identity(6, 6)).norm() < 1e-14);
        let direct = hermitian_eigenvalues(&m);
        let mut via: Vec<f64> = s.clone().symmetric_eigenvalues().iter().map(|v| v - shift).collect();
        via.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in direct.iter().zip(&via) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let eig = s.symmetric_eigen();
        let vecs = &h * eig.eigenvectors;
        let back = spectral_map(&eig.eigenvalues.map(|v| v - shift), &vecs, |x| x);
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn sparse_projectors_have_sound_spectra() {
        // rank-one projectors onto sparse vectors, the shape that breaks the plain sweep
        for (dim, support) in [(32usize, vec![3usize, 17]), (64, vec![0, 21, 42, 63]), (64, vec![5])] {
            let amp = Complex64::new(1.0 / (support.len() as f64).sqrt(), 0.0);
            let m = CMatrix::from_fn(dim, dim, |i, j| {
                if support.contains(&i) && support.contains(&j) { amp * amp.conj() } else { Complex64::new(0.0, 0.0) }
            });
            let vals = hermitian_eigenvalues(&m);
            assert!(spectrum_is_sound(&vals, &m));
            assert!((vals[dim - 1] - 1.0).abs() < 1e-12 && vals[0].abs() < 1e-12);
            let (v, _) = hermitian_eigen(&m);
            assert!(spectrum_is_sound(v.as_slice(), &m));
        }
    }

    #[test]
    fn two_by_two_closed_form_matches_general_solver() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.7, 0.0),
                Complex64::new(0.1, -0.2),
                Complex64::new(0.1, 0.2),
                Complex64::new(0.3, 0.0),
            ],
        );
        let fast = hermitian_eigenvalues(&m);
        let mut slow: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        slow.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_map_identity_reconstructs() {
        let m = CMatrix::from_fn(3, 3, |i, j| {
            let v = Complex64::new((i + 2 * j) as f64, i as f64 - j as f64);
            if i == j {
                Complex64::new(v.re, 0.0)
            } else {
                v
            }
        });
        let mut h = m.clone() + m.adjoint();
        hermitize(&mut h);
        let (vals, vecs) = hermitian_eigen(&h);
        let back = spectral_map(&vals, &vecs, |x| x);
        assert!((back - h).norm() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite_and_inverts() {
        let m = CMatrix::from_row_slice(2, 2, &[
            Complex64::new(2.0, 0.0), Complex64::new(0.5, 0.5),
            Complex64::new(0.5, -0.5), Complex64::new(1.0, 0.0),
        ]);
        let (ld, inv) = hermitian_log_det_inverse(&m).unwrap();
        let det = 2.0 - 0.5;
        assert!((ld - f64::ln(det)).abs() < 1e-14);
        assert!((&m * inv - CMatrix::identity(2, 2)).norm() < 1e-14);
        let neg = CMatrix::from_row_slice(2, 2, &[
            Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0),
        ]);
        assert!(hermitian_cholesky(&neg).is_none());
        assert!(hermitian_cholesky(&(-CMatrix::identity(2, 2))).is_none());
    }
}
