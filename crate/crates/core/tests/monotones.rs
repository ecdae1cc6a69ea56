use mipt_core::circuit::{run_realization, CircuitConfig};
use mipt_core::linalg::{self, CMatrix};
use mipt_core::monotones::{
    ckw_check, ghz_density, gmn, negativity, partial_transpose, Bipartition, GmnSolver, GMN_ZERO_THRESHOLD,
};
use mipt_core::rng::seeded;
use mipt_core::DensityMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

// Reference values from tests/oracle/gmn_reference.py (Clarabel, tolerances 1e-10).
const GHZ3: f64 = 0.4999999988;
const GHZ3_NOISY_08: f64 = 0.3249999921;
const GHZ3_NOISY_05: f64 = 0.0624999917;
const W3: f64 = 0.4428090416;
const GHZ4: f64 = 0.4999999931;

fn ginibre_density(dim: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let a = CMatrix::from_fn(dim, rank, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let m = &a * a.adjoint();
    let tr = linalg::trace(&m);
    let mut m = m / tr;
    linalg::hermitize(&mut m);
    DensityMatrix::new(m).unwrap()
}

fn noisy(p: f64, rho: &DensityMatrix) -> DensityMatrix {
    let mixed = DensityMatrix::maximally_mixed(rho.n_sites());
    DensityMatrix::mixture(&[p, 1.0 - p], &[rho.clone(), mixed]).unwrap()
}

fn w3() -> DensityMatrix {
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    for i in [1, 2, 4] {
        amps[i] = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
    }
    DensityMatrix::from_pure(&amps).unwrap()
}

/// Reorders a 3-qubit operator so that logical qubit `perm[s]` sits at site `s`.
fn permute_qubits(rho: &DensityMatrix, perm: [usize; 3]) -> DensityMatrix {
    let map = |i: usize| (0..3).map(|s| ((i >> perm[s]) & 1) << s).sum::<usize>();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(8, 8);
    for i in 0..8 {
        for j in 0..8 {
            out[(map(i), map(j))] = m[(i, j)];
        }
    }
    DensityMatrix::new(out).unwrap()
}

#[test]
fn gmn_matches_reference_solver() {
    let cases = [
        (ghz_density(3), GHZ3, 1e-5),
        (noisy(0.8, &ghz_density(3)), GHZ3_NOISY_08, 1e-5),
        (noisy(0.5, &ghz_density(3)), GHZ3_NOISY_05, 1e-5),
        (w3(), W3, 1e-5),
    ];
    for (rho, expected, tol) in cases {
        let r = gmn(&rho, 3).unwrap();
        assert!(r.converged);
        assert!((r.value - expected).abs() < tol, "{} vs {expected}", r.value);
    }
    let r = gmn(&ghz_density(4), 4).unwrap();
    assert!(r.converged);
    assert!((r.value - GHZ4).abs() < 1e-5, "{}", r.value);
}

#[test]
fn two_party_gmn_equals_negativity_on_random_states() {
    let mut rng = seeded(2024);
    let solver = GmnSolver::new(2).unwrap();
    let cut = Bipartition::new(2, &[0]).unwrap();
    let mut entangled = 0;
    for i in 0..500 {
        let rank = 1 + i % 4;
        let rho = ginibre_density(4, rank, &mut rng);
        let g = solver.gmn(&rho).unwrap();
        let n = negativity(&rho, &cut).unwrap();
        assert!(g.converged);
        let n_snapped = if n <= GMN_ZERO_THRESHOLD { 0.0 } else { n };
        assert!((g.value - n_snapped).abs() < 1e-6, "state {i}: gmn {} vs negativity {n}", g.value);
        entangled += usize::from(n > 0.0);
    }
    assert!(entangled > 100);
}

#[test]
fn gmn_is_zero_on_biseparable_mixtures() {
    let mut rng = seeded(7);
    for _ in 0..20 {
        let mut parts = Vec::new();
        for perm in [[0, 1, 2], [1, 0, 2], [2, 1, 0]] {
            // qubit `perm[0]` separated from an entangled pair
            let single = ginibre_density(2, 1, &mut rng);
            let pair = ginibre_density(4, 1, &mut rng);
            parts.push(permute_qubits(&single.tensor(&pair), perm));
        }
        let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 0.1).collect();
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let rho = DensityMatrix::mixture(&w, &parts).unwrap();
        let r = gmn(&rho, 3).unwrap();
        assert!(r.converged);
        assert_eq!(r.value, 0.0, "biseparable mixture gave {}", r.value);
    }
}

#[test]
fn gmn_never_exceeds_any_cut_negativity() {
    let mut rng = seeded(11);
    let solver = GmnSolver::new(3).unwrap();
    for i in 0..30 {
        let rho = ginibre_density(8, 1 + i % 3, &mut rng);
        let g = solver.gmn(&rho).unwrap();
        assert!(g.converged);
        for cut in solver.cuts() {
            assert!(g.value <= negativity(&rho, cut).unwrap() + 1e-6);
        }
    }
}

#[test]
fn ckw_holds_on_monitored_states() {
    for idx in 0..1000u64 {
        let mut cfg = CircuitConfig::new(8, [0.05, 0.15, 0.3][(idx % 3) as usize]);
        cfg.master_seed = 99;
        cfg.realization_index = idx;
        let real = run_realization(&cfg).unwrap();
        for a in [0, 3] {
            let r = ckw_check(&real.state, a).unwrap();
            assert!(r.holds, "realization {idx}, site {a}: {} < {}", r.lhs, r.rhs);
        }
    }
}

#[test]
fn averaged_ckw_survives_disorder_average() {
    let n = 8;
    let m = 400;
    let mut lhs = 0.0;
    let mut pair = vec![0.0; n];
    let cut = Bipartition::new(2, &[0]).unwrap();
    for idx in 0..m {
        let mut cfg = CircuitConfig::new(n, 0.1);
        cfg.master_seed = 5;
        cfg.realization_index = idx;
        let s = run_realization(&cfg).unwrap().state;
        lhs += ckw_check(&s, 0).unwrap().lhs.sqrt();
        for (b, acc) in pair.iter_mut().enumerate().skip(1) {
            *acc += negativity(&s.reduced_density_matrix(&[0, b]).unwrap(), &cut).unwrap();
        }
    }
    let lhs = (lhs / m as f64).powi(2);
    let rhs: f64 = pair.iter().map(|v| (v / m as f64).powi(2)).sum();
    assert!(lhs >= rhs, "{lhs} < {rhs}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_transpose_is_hermitian_involution(seed in any::<u64>(), mask in 1usize..7) {
        let mut rng = seeded(seed);
        let rho = ginibre_density(8, 2, &mut rng);
        let sites: Vec<usize> = (0..3).filter(|s| mask >> s & 1 == 1).collect();
        let pt = partial_transpose(&rho, &sites).unwrap();
        prop_assert!(linalg::hermiticity_error(&pt) < 1e-10);
        prop_assert!((linalg::trace(&pt) - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        let raw = mipt_core::monotones::partial_transpose_factors(&pt, &[1, 1, 1], &sites).unwrap();
        prop_assert!((raw - rho.matrix()).norm() < 1e-12);
    }

    #[test]
    fn negativity_is_cut_symmetric(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let rho = ginibre_density(8, 1, &mut rng);
        for cut in Bipartition::enumerate(3) {
            let flipped = Bipartition::new(3, cut.m2()).unwrap();
            let a = negativity(&rho, &cut).unwrap();
            let b = negativity(&rho, &flipped).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
