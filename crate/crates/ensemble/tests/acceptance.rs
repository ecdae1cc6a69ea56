//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `cargo test --test acceptance` runs the criteria that finish in minutes.
//! `cargo test --test acceptance -- --ignored` runs the long ensemble
//! criteria as well; numeric arguments restrict the run to those criteria.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use mipt_core::circuit::{apply_uniform_layer, run_realization, CircuitConfig};
use mipt_core::correlations::{mutual_information_k, von_neumann_entropy, RegionSet};
use mipt_core::gates::{haar_unitary, u_xx_gate};
use mipt_core::linalg::{self, CMatrix};
use mipt_core::monotones::{ckw_check, ghz_density, gmn, negativity, Bipartition, GmnSolver, GMN_ZERO_THRESHOLD};
use mipt_core::rng::seeded;
use mipt_core::sdp::{Cone, Field, SdpProblem, SdpStatus};
use mipt_core::{DensityMatrix, StateVector};
use mipt_ensemble::accumulator::EnsembleAccumulator;
use mipt_ensemble::observable::{Layout, ObsMetric, ObservableKey};
use mipt_ensemble::persist::{encode, FileKind};
use mipt_ensemble::runner::{self, run_chunks, run_range, Progress};
use mipt_ensemble::{GateChoice, RunConfig, RunHeader, Shard};
use mipt_scaling::bounds::{exponent_bound_flags, Exponent};
use mipt_scaling::collapse::{collapse, linspace};
use mipt_scaling::crossing::find_crossing;
use mipt_scaling::fit::fit_tail;
use mipt_scaling::series::mean_stderr;
use mipt_scaling::{CurvePoint, DecayPoint, DecaySeries, Metric, ScalingCurve};

/// GMN of the three-qubit GHZ state from the conic-solver oracle
/// (crates/core/tests/oracle/gmn_reference.py).
const GHZ3_REFERENCE: f64 = 0.4999999988;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn header(n: usize, p: f64, circuits: u64, observables: &str, keep_raw: bool) -> RunHeader {
    let mut h = RunHeader {
        n_qubits: n,
        p_measure: p,
        periods_multiplier: 1.0,
        gate_ensemble: GateChoice::Mms,
        final_layer_measure_prob: 0.5,
        master_seed: 2024,
        circuits_total: circuits,
        observables: observables.into(),
        keep_raw,
    };
    h.validate().expect("valid acceptance configuration");
    h
}

fn ensemble(h: &RunHeader) -> EnsembleAccumulator {
    let pool = runner::thread_pool().expect("thread pool");
    pool.install(|| run_range(h, 0, h.circuits_total)).expect("ensemble run")
}

fn key(metric: ObsMetric, k: usize, layout: Layout, x: usize) -> ObservableKey {
    ObservableKey { metric, k, layout, x }
}

/// Mean and standard error over realizations (each value already averaged
/// over the realization's translates).
fn realization_mean(acc: &EnsembleAccumulator, key: &ObservableKey) -> (f64, f64) {
    let values: Vec<f64> = acc.raw[key].iter().map(|e| e.1).collect();
    mean_stderr(&values)
}

/// Largest relative violation of `mean = p_ent · n_mag` over every key.
fn worst_decomposition_error(acc: &EnsembleAccumulator) -> f64 {
    acc.stats
        .values()
        .filter(|s| s.count > 0)
        .map(|s| {
            let d = s.decompose();
            let scale = d.mean.abs().max(f64::MIN_POSITIVE);
            if d.mean == 0.0 && d.p_ent * d.n_mag == 0.0 {
                0.0
            } else {
                (d.mean - d.p_ent * d.n_mag).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn haar_pure(rng: &mut impl Rng) -> DensityMatrix {
    let u = haar_unitary(4, rng);
    let amps: Vec<Complex64> = (0..4).map(|i| u[(i, 0)]).collect();
    DensityMatrix::from_pure(&amps).unwrap()
}

fn criterion_1() -> Verdict {
    let mut rng = seeded(1);
    let solver = GmnSolver::new(2).unwrap();
    let cut = Bipartition::new(2, &[0]).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let terms = 1 + i % 4;
        let states: Vec<DensityMatrix> = (0..terms).map(|_| haar_pure(&mut rng)).collect();
        let w: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let rho = DensityMatrix::mixture(&w, &states).unwrap();
        let g = solver.gmn(&rho).unwrap();
        let n = negativity(&rho, &cut).unwrap();
        // values at or below the zero threshold are reported as exactly 0
        let n = if n <= GMN_ZERO_THRESHOLD { 0.0 } else { n };
        worst = worst.max((g.value - n).abs());
    }
    verdict(worst <= 1e-6, format!("max |gmn - negativity| = {worst:.2e} over 500 states (tol 1e-6)"))
}

fn criterion_2() -> Verdict {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let cut = Bipartition::new(2, &[0]).unwrap();
    let bell = DensityMatrix::from_pure(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
    let bell_err = (negativity(&bell, &cut).unwrap() - 0.5).abs();
    let singlet = DensityMatrix::from_pure(&[c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]).unwrap();
    let mut werner_err: f64 = 0.0;
    for w in [0.0, 1.0 / 3.0, 0.6, 1.0] {
        let rho = DensityMatrix::mixture(&[w, 1.0 - w], &[singlet.clone(), DensityMatrix::maximally_mixed(2)]).unwrap();
        let expected = ((3.0 * w - 1.0) / 4.0).max(0.0);
        werner_err = werner_err.max((negativity(&rho, &cut).unwrap() - expected).abs());
    }
    let ghz = gmn(&ghz_density(3), 3).unwrap();
    let ghz_err = (ghz.value - GHZ3_REFERENCE).abs();
    let plus = DensityMatrix::from_pure(&[c(s, 0.0), c(s, 0.0)]).unwrap();
    let product = plus.tensor(&plus).tensor(&plus);
    let prod = gmn(&product, 3).unwrap().value;
    let pass = bell_err <= 1e-9 && werner_err <= 1e-9 && ghz.converged && ghz_err <= 1e-5 && prod <= 1e-6;
    verdict(
        pass,
        format!(
            "bell err {bell_err:.1e}, werner max err {werner_err:.1e}, gmn(GHZ3) {:.10} (ref {GHZ3_REFERENCE}, err {ghz_err:.1e}), gmn(product) {prod:.1e}",
            ghz.value
        ),
    )
}

fn criterion_3() -> Verdict {
    let mut rng = seeded(3);
    let u = u_xx_gate();
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let amps = (0..256).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let input = StateVector::from_amplitudes(amps).unwrap();
        let mut out = input.clone();
        for odd in [false, true, false, true] {
            apply_uniform_layer(&mut out, &u, odd);
        }
        worst = worst.min(input.inner(&out).norm());
    }
    verdict(worst >= 1.0 - 1e-10, format!("min |<in|out>| = {worst:.15} over 100 states (need >= 1 - 1e-10)"))
}

fn criterion_4() -> Verdict {
    let product = StateVector::new_product_state(10).unwrap();
    let mut worst_ik: f64 = 0.0;
    for k in 2..=4 {
        for x in 1..=2 {
            let r = RegionSet::symmetric(10, k, x, 0, 1).unwrap();
            worst_ik = worst_ik.max(mutual_information_k(&product, &r).unwrap().abs());
        }
    }
    let mut rng = seeded(4);
    let mut worst_s: f64 = 0.0;
    for idx in 0..100 {
        let mut cfg = CircuitConfig::new(10, [0.05, 0.15, 0.3][idx % 3]);
        cfg.master_seed = 44;
        cfg.realization_index = idx as u64;
        let state = run_realization(&cfg).unwrap().state;
        let size = 2 + idx % 4;
        let mut sites: Vec<usize> = (0..10).collect();
        for i in 0..size {
            let j = rng.random_range(i..10);
            sites.swap(i, j);
        }
        let (x, rest) = sites.split_at(size);
        let s_x = von_neumann_entropy(&state.reduced_density_matrix(x).unwrap()).unwrap();
        let s_c = von_neumann_entropy(&state.reduced_density_matrix(rest).unwrap()).unwrap();
        worst_s = worst_s.max((s_x - s_c).abs());
    }
    verdict(
        worst_ik <= 1e-12 && worst_s <= 1e-9,
        format!("product |I_k| max {worst_ik:.1e} (tol 1e-12), |S(X) - S(X^c)| max {worst_s:.1e} (tol 1e-9)"),
    )
}

fn criterion_5() -> Verdict {
    let half = key(ObsMetric::HalfChainEntropy, 2, Layout::Half, 0);
    let low = ensemble(&header(12, 0.05, 2000, "half", true));
    let high = ensemble(&header(12, 0.35, 2000, "half", true));
    let (m_lo, e_lo) = realization_mean(&low, &half);
    let (m_hi, e_hi) = realization_mean(&high, &half);
    let diff = m_lo - m_hi;
    let sigma = (e_lo * e_lo + e_hi * e_hi).sqrt();
    verdict(
        diff >= 1.0 && diff >= 5.0 * sigma,
        format!("S_half(p=0.05) = {m_lo:.4} ± {e_lo:.4}, S_half(p=0.35) = {m_hi:.4} ± {e_hi:.4}, difference {diff:.3} bits = {:.1} sigma", diff / sigma),
    )
}

/// Averaged quarter-partition TMI curves on the criterion-6 grid.
fn tmi_curves() -> Vec<ScalingCurve> {
    let tmi = key(ObsMetric::TmiQuarters, 4, Layout::Quarters, 0);
    let grid: Vec<f64> = (0..=14).map(|i| 0.13 + 0.005 * i as f64).collect();
    [12usize, 16]
        .iter()
        .map(|&n| {
            let points = grid
                .iter()
                .map(|&p| {
                    let acc = ensemble(&header(n, p, 50_000, "tmi", true));
                    let (mean, stderr) = realization_mean(&acc, &tmi);
                    CurvePoint { p, mean, stderr, sample_count: acc.raw[&tmi].len() as u64 }
                })
                .collect();
            ScalingCurve::new(n, points).unwrap()
        })
        .collect()
}

fn criteria_6_7() -> Vec<(usize, Verdict)> {
    let curves = tmi_curves();
    let c6 = match find_crossing(&curves[0], &curves[1]) {
        Ok(x) => verdict(
            (x.p_c - 0.189).abs() <= 0.010,
            format!("p_c = {:.4} ± {:.4} (target 0.189 ± 0.010)", x.p_c, x.p_c_err),
        ),
        Err(e) => verdict(false, format!("no crossing: {e}")),
    };
    let c7 = match collapse(&curves[0], &curves[1], &linspace(0.13, 0.20, 71), &linspace(0.5, 3.0, 101)) {
        Ok(col) => verdict(
            (1.45..=1.95).contains(&col.nu),
            format!("nu = {:.3}, p_c = {:.4}, objective {:.3} (target nu in [1.45, 1.95])", col.nu, col.p_c, col.objective),
        ),
        Err(e) => verdict(false, format!("collapse failed: {e}")),
    };
    vec![(6, c6), (7, c7)]
}

fn criterion_8_and_flags() -> Vec<(usize, Verdict)> {
    let h = header(16, 0.17, 200_000, "mi:k=2:sym", true);
    let acc = ensemble(&h);
    let mut points = Vec::new();
    for (k, _) in acc.stats.iter() {
        let (mean, stderr) = realization_mean(&acc, k);
        points.push(DecayPoint { d: k.distance_scale(16).unwrap(), mean, stderr });
    }
    let series = DecaySeries::new(16, 2, Metric::Mi, points).unwrap();
    let decreasing = series.points().windows(2).all(|w| w[1].mean < w[0].mean);
    let fit = fit_tail(&series, 4);
    let c8 = match &fit {
        Ok(f) => verdict(
            decreasing && (3.0..=4.6).contains(&f.alpha),
            format!("I_2 strictly decreasing in d: {decreasing}; alpha_2 = {:.3} ± {:.3} (target [3.0, 4.6])", f.alpha, f.alpha_err),
        ),
        Err(e) => verdict(false, format!("fit failed: {e}")),
    };
    let c10 = match &fit {
        Ok(f) => {
            let flags = exponent_bound_flags(&[Exponent { k: 2, alpha: f.alpha }], &[]);
            verdict(flags.is_empty(), format!("exponent-bound flags on the criterion-8 fit: {flags:?}"))
        }
        Err(e) => verdict(false, format!("no criterion-8 fit to flag: {e}")),
    };
    vec![(8, c8), (10, c10)]
}

fn criterion_9() -> Verdict {
    let h = header(12, 0.17, 100_000, "mi:k=2:x=2;mi:k=3:x=2;mi:k=4:x=2", true);
    let acc = ensemble(&h);
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, sign) in [(2usize, 1.0), (3, -1.0), (4, 1.0)] {
        let (m, e) = realization_mean(&acc, &key(ObsMetric::Mi, k, Layout::Symmetric, 2));
        pass &= sign * m >= 2.0 * e;
        parts.push(format!("I_{k} = {m:.3e} ± {e:.1e} ({:.1} sigma)", m / e));
    }
    verdict(pass, parts.join(", "))
}

fn criterion_10() -> Verdict {
    let n = 8;
    let m = 1000;
    let cut = Bipartition::new(2, &[0]).unwrap();
    let mut violations = 0;
    let mut lhs_avg = 0.0;
    let mut pair = vec![0.0; n];
    for idx in 0..m {
        let mut cfg = CircuitConfig::new(n, [0.05, 0.1, 0.17, 0.3][idx % 4]);
        cfg.master_seed = 10;
        cfg.realization_index = idx as u64;
        let state = run_realization(&cfg).unwrap().state;
        for a in 0..n {
            violations += usize::from(!ckw_check(&state, a).unwrap().holds);
        }
        lhs_avg += ckw_check(&state, 0).unwrap().lhs.sqrt();
        for (b, acc) in pair.iter_mut().enumerate().skip(1) {
            *acc += negativity(&state.reduced_density_matrix(&[0, b]).unwrap(), &cut).unwrap();
        }
    }
    let lhs = (lhs_avg / m as f64).powi(2);
    let rhs: f64 = pair.iter().map(|v| (v / m as f64).powi(2)).sum();
    verdict(
        violations == 0 && lhs >= rhs,
        format!(
            "CKW violations {violations} of {} checks (slack 1e-9); averaged CKW {lhs:.4} >= {rhs:.4}",
            m * n
        ),
    )
}

fn criterion_11() -> Verdict {
    let p = 0.17;
    let h = header(12, p, 10_000, "mi:k=2:x=3:ewg;mi:k=3:x=2;half", false);
    let acc = ensemble(&h);
    let grid = &acc.grids[&key(ObsMetric::Mi, 2, Layout::Symmetric, 3)];
    let trials = grid.realization_count() as f64;
    let bulk_layers = grid.n_layers() - 1;
    let counts = &grid.unweighted_sums()[..bulk_layers * grid.n_sites()];
    let cell_sigma = (p * (1.0 - p) / trials).sqrt();
    let worst_cell = counts.iter().map(|&c| (c as f64 / trials - p).abs() / cell_sigma).fold(0.0, f64::max);
    let cells = counts.len() as f64;
    let pooled = counts.iter().sum::<u64>() as f64 / (trials * cells);
    let pooled_z = (pooled - p).abs() / (p * (1.0 - p) / (trials * cells)).sqrt();
    let decomposition = worst_decomposition_error(&acc);
    verdict(
        pooled_z <= 3.0 && worst_cell <= 3.0 && decomposition <= 1e-12,
        format!(
            "bulk rate {pooled:.5} ({pooled_z:.2} sigma over {} cells; every bulk cell within {worst_cell:.2} sigma of {p}); max |mean - p_ent*n_mag|/mean = {decomposition:.1e}",
            cells
        ),
    )
}

fn criterion_12() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut h = header(12, 0.17, 48, "mi:k=2;gmn:k=3:x=2;tmi:ewg;half", true);
    h.periods_multiplier = 0.5;
    let config = |name: &str, shard: Shard| RunConfig {
        header: h.clone(),
        shard,
        out_dir: dir.path().join(name),
        checkpoint_every: 10,
    };
    let read = |name: &str| std::fs::read(dir.path().join(name).join(runner::AGGREGATE_FILE)).unwrap();

    runner::run_shard(&config("single", Shard::WHOLE)).unwrap();
    runner::run_shard(&config("b", Shard { index: 1, count: 2 })).unwrap();
    runner::run_shard(&config("a", Shard { index: 0, count: 2 })).unwrap();
    let parts: Vec<PathBuf> = ["b", "a"].iter().map(|s| dir.path().join(s).join(runner::AGGREGATE_FILE)).collect();
    let merged = runner::merge_files(&parts).unwrap();
    let shards_equal = encode(&merged, FileKind::Aggregate) == read("single");

    let resumed = config("resumed", Shard::WHOLE);
    let paused = matches!(run_chunks(&resumed, Some(2)).unwrap(), Progress::Paused { next_index: 20 });
    runner::run_shard(&resumed).unwrap();
    let resume_equal = read("resumed") == read("single");
    verdict(
        shards_equal && paused && resume_equal,
        format!("2-shard merge byte-identical: {shards_equal}; checkpoint/resume byte-identical: {}", paused && resume_equal),
    )
}

fn criterion_13() -> Verdict {
    let mut rng = seeded(13);
    let mut worst: f64 = 0.0;
    let mut max_iter = 0;
    let mut all_optimal = true;
    for _ in 0..100 {
        let a = CMatrix::from_fn(4, 4, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mut h = &a + a.adjoint();
        linalg::hermitize(&mut h);
        let lmin = linalg::hermitian_eigenvalues(&h)[0];
        let mut p = SdpProblem::new();
        let b = p.add_block(4, Field::Complex, Cone::Psd);
        p.set_objective(b, h);
        p.add_constraint(&[(b, CMatrix::identity(4, 4))], 1.0);
        let s = p.solve(1e-7, 5000);
        all_optimal &= s.status == SdpStatus::Optimal;
        worst = worst.max((s.objective - lmin).abs());
        max_iter = max_iter.max(s.iterations);
    }
    verdict(
        all_optimal && worst <= 1e-6 && max_iter <= 5000,
        format!("100 instances optimal: {all_optimal}; max |value - lambda_min| = {worst:.1e}; max iterations {max_iter} (limit 5000)"),
    )
}

type Criterion = (&'static [usize], bool, fn() -> Vec<(usize, Verdict)>);

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let heavy = args.iter().any(|a| a == "--ignored" || a == "--include-ignored");
    let only: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }

    let criteria: Vec<Criterion> = vec![
        (&[1], false, || vec![(1, criterion_1())]),
        (&[2], false, || vec![(2, criterion_2())]),
        (&[3], false, || vec![(3, criterion_3())]),
        (&[4], false, || vec![(4, criterion_4())]),
        (&[5], false, || vec![(5, criterion_5())]),
        (&[6, 7], true, criteria_6_7),
        (&[8, 10], true, criterion_8_and_flags),
        (&[9], true, || vec![(9, criterion_9())]),
        (&[10], false, || vec![(10, criterion_10())]),
        (&[11], false, || vec![(11, criterion_11())]),
        (&[12], false, || vec![(12, criterion_12())]),
        (&[13], false, || vec![(13, criterion_13())]),
    ];

    let skip_note = "long ensemble run; use `cargo test --test acceptance -- --ignored`";
    let mut parts: BTreeMap<usize, Vec<Option<(Verdict, f64)>>> = BTreeMap::new();
    for (ids, is_heavy, run) in criteria {
        if !only.is_empty() && !ids.iter().any(|i| only.contains(i)) {
            continue;
        }
        if is_heavy && !heavy {
            for &i in ids {
                parts.entry(i).or_default().push(None);
            }
            continue;
        }
        let start = Instant::now();
        for (i, v) in run() {
            parts.entry(i).or_default().push(Some((v, start.elapsed().as_secs_f64())));
        }
    }

    let mut failed = Vec::new();
    for (i, list) in parts {
        let ran: Vec<&(Verdict, f64)> = list.iter().flatten().collect();
        if ran.is_empty() {
            println!("criterion {i}: SKIPPED ({skip_note})");
            continue;
        }
        let pass = ran.iter().all(|(v, _)| v.pass);
        let detail: Vec<&str> = ran.iter().map(|(v, _)| v.detail.as_str()).collect();
        let secs: f64 = ran.iter().map(|(_, t)| t).sum();
        let partial = if ran.len() < list.len() {
            format!("; remaining part SKIPPED ({skip_note})")
        } else {
            String::new()
        };
        let status = if pass { "PASS" } else { "FAIL" };
        println!("criterion {i}: {status} {}{partial} [{secs:.1}s]", detail.join("; "));
        if !pass {
            failed.push(i);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
