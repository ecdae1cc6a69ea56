//! Exponent fits and critical-point analysis over exported aggregates.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use mipt_core::rng::seeded;
use mipt_scaling::bootstrap::{bootstrap_extrapolation, BootstrapExtrapolation, CollapseGrid, RawSamples};
use mipt_scaling::bounds::{constraint_report, exponent_bound_flags, BoundViolation, ConstraintCheck, Exponent};
use mipt_scaling::collapse::{collapse, Collapse};
use mipt_scaling::crossing::{find_crossing, Crossing};
use mipt_scaling::extrapolate::{extrapolate_exponent, extrapolate_pairs, ExponentExtrapolation, PairExtrapolation};
use mipt_scaling::fit::{default_window, fit_power_law, fit_tail, PowerLawFit};
use mipt_scaling::{CurvePoint, DecayPoint, DecaySeries, Metric, ScalingCurve};

use crate::error::{Error, Result};

/// A row of `decay.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub metric: String,
    pub k: usize,
    pub config: String,
    pub x: usize,
    pub d: f64,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    pub nonzero_count: u64,
}

/// A row of `stats.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub metric: String,
    pub k: usize,
    pub config: String,
    pub x: usize,
    pub count: u64,
    pub zero_count: u64,
    pub nonzero_count: u64,
    pub mean: f64,
    pub stderr: f64,
    pub p_ent: f64,
    pub p_ent_stderr: f64,
    pub n_mag: f64,
    pub n_mag_stderr: f64,
}

/// A row of `raw.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub p: f64,
    pub metric: String,
    pub k: usize,
    pub config: String,
    pub x: usize,
    pub realization: u64,
    pub value: f64,
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    })?;
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::format(path, e.to_string())))
        .collect()
}

pub fn read_many<T: DeserializeOwned>(paths: &[impl AsRef<Path>]) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_csv(p.as_ref())?);
    }
    Ok(out)
}

/// Which points of a decay series enter the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitWindow {
    /// The per-k default window, or every point when k has none.
    Default,
    Range { d_min: f64, d_max: f64 },
    /// The given number of largest-d points.
    Tail { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitEntry {
    pub n_qubits: usize,
    pub p: f64,
    pub metric: String,
    pub k: usize,
    pub config: String,
    pub window: FitWindow,
    pub fit: Option<PowerLawFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtrapolationEntry {
    pub metric: String,
    pub k: usize,
    pub sizes: Vec<usize>,
    pub result: Option<ExponentExtrapolation>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentUsed {
    pub metric: String,
    pub k: usize,
    pub alpha: f64,
    /// `extrapolated` or `N=<size>`.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub fits: Vec<FitEntry>,
    pub extrapolations: Vec<ExtrapolationEntry>,
    pub exponents: Vec<ExponentUsed>,
    pub bound_violations: Vec<BoundViolation>,
    pub constraints: Vec<ConstraintCheck>,
}

fn split<T>(r: mipt_scaling::Result<T>) -> (Option<T>, Option<String>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Builds one decay series per `(N, p, metric, k, config)`.
pub fn decay_series(rows: &[DecayRecord]) -> Result<Vec<(f64, String, DecaySeries)>> {
    let mut groups: BTreeMap<(usize, u64, String, usize, String), Vec<DecayPoint>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((r.n, r.p.to_bits(), r.metric.clone(), r.k, r.config.clone()))
            .or_default()
            .push(DecayPoint { d: r.d, mean: r.mean, stderr: r.stderr });
    }
    groups
        .into_iter()
        .map(|((n, p, metric, k, config), points)| {
            let series = DecaySeries::new(n, k, Metric::parse(&metric)?, points)?;
            Ok((f64::from_bits(p), config, series))
        })
        .collect()
}

pub fn fit_series(series: &DecaySeries, window: FitWindow) -> mipt_scaling::Result<PowerLawFit> {
    match window {
        FitWindow::Default => {
            let (lo, hi) = default_window(series.k_parties).unwrap_or((0.0, f64::INFINITY));
            fit_power_law(series, lo, hi)
        }
        FitWindow::Range { d_min, d_max } => fit_power_law(series, d_min, d_max),
        FitWindow::Tail { count } => fit_tail(series, count),
    }
}

/// Fits every series, extrapolates symmetric-layout MI and GMN exponents in
/// N and checks the monogamy bounds on the resulting exponents. Where no
/// extrapolation is available the largest-size fit stands in.
pub fn analyze(rows: &[DecayRecord], window: FitWindow) -> Result<AnalysisReport> {
    let mut fits = Vec::new();
    let mut by_metric: BTreeMap<(String, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for (p, config, series) in decay_series(rows)? {
        let (fit, error) = split(fit_series(&series, window));
        let metric = series.metric.name().to_string();
        if let (Some(f), "sym", Metric::Mi | Metric::Gmn) = (&fit, config.as_str(), series.metric) {
            by_metric.entry((metric.clone(), series.k_parties)).or_default().push((series.n_qubits, f.alpha));
        }
        fits.push(FitEntry { n_qubits: series.n_qubits, p, metric, k: series.k_parties, config, window, fit, error });
    }

    let mut extrapolations = Vec::new();
    let mut exponents = Vec::new();
    for ((metric, k), mut alphas) in by_metric {
        alphas.sort_by_key(|a| a.0);
        alphas.dedup_by_key(|a| a.0);
        let sizes = alphas.iter().map(|a| a.0).collect();
        let (result, error) = split(extrapolate_exponent(&alphas));
        let used = match &result {
            Some(e) => ExponentUsed { metric: metric.clone(), k, alpha: e.c, source: "extrapolated".into() },
            None => {
                let &(n, alpha) = alphas.last().expect("group is non-empty");
                ExponentUsed { metric: metric.clone(), k, alpha, source: format!("N={n}") }
            }
        };
        exponents.push(used);
        extrapolations.push(ExtrapolationEntry { metric, k, sizes, result, error });
    }

    let pick = |name: &str| -> Vec<Exponent> {
        exponents.iter().filter(|e| e.metric == name).map(|e| Exponent { k: e.k, alpha: e.alpha }).collect()
    };
    let (mi, gmn) = (pick("MI"), pick("GMN"));
    Ok(AnalysisReport {
        fits,
        extrapolations,
        bound_violations: exponent_bound_flags(&mi, &gmn),
        constraints: constraint_report(&mi, &gmn),
        exponents,
    })
}

/// Averaged quarter-partition tripartite information against `p`, one curve
/// per size, sizes ascending.
pub fn tmi_curves(rows: &[StatsRecord]) -> Result<Vec<ScalingCurve>> {
    let mut by_size: BTreeMap<usize, Vec<CurvePoint>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == "TMI_QUARTERS") {
        by_size.entry(r.n).or_default().push(CurvePoint {
            p: r.p,
            mean: r.mean,
            stderr: r.stderr,
            sample_count: r.count,
        });
    }
    by_size.into_iter().map(|(n, pts)| Ok(ScalingCurve::new(n, pts)?)).collect()
}

/// Per-realization tripartite information grouped by `(N, p)`.
pub fn tmi_raw(rows: &[RawRecord]) -> Vec<RawSamples> {
    let mut groups: BTreeMap<(usize, u64), Vec<(u64, f64)>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.metric == "TMI_QUARTERS") {
        groups.entry((r.n, r.p.to_bits())).or_default().push((r.realization, r.value));
    }
    groups
        .into_iter()
        .map(|((n, p), mut v)| {
            v.sort_by_key(|e| e.0);
            RawSamples { n_qubits: n, p: f64::from_bits(p), values: v.into_iter().map(|e| e.1).collect() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseOptions {
    pub p_c_grid: Vec<f64>,
    pub nu_grid: Vec<f64>,
    /// `(resamples, subsample size, seed)`; skipped when absent.
    pub bootstrap: Option<(usize, usize, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult {
    pub n1: usize,
    pub n2: usize,
    pub crossing: Option<Crossing>,
    pub crossing_error: Option<String>,
    pub collapse: Option<Collapse>,
    pub collapse_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseReport {
    pub pairs: Vec<PairResult>,
    pub p_c_crossing_extrapolation: Option<PairExtrapolation>,
    pub p_c_collapse_extrapolation: Option<PairExtrapolation>,
    pub nu_extrapolation: Option<PairExtrapolation>,
    pub bootstrap: Option<BootstrapExtrapolation>,
    pub bootstrap_error: Option<String>,
}

/// Crossing and collapse for every size pair, their extrapolation in
/// `(N₁N₂)⁻¹`, and optionally the bootstrap spread over the raw samples.
pub fn collapse_analysis(curves: &[ScalingCurve], raw: &[RawSamples], opts: &CollapseOptions) -> CollapseReport {
    let mut pairs = Vec::new();
    for (i, c1) in curves.iter().enumerate() {
        for c2 in &curves[i + 1..] {
            let (crossing, crossing_error) = split(find_crossing(c1, c2));
            let (collapse, collapse_error) = split(collapse(c1, c2, &opts.p_c_grid, &opts.nu_grid));
            pairs.push(PairResult { n1: c1.n_qubits, n2: c2.n_qubits, crossing, crossing_error, collapse, collapse_error });
        }
    }
    let extrapolate = |value: &dyn Fn(&PairResult) -> Option<f64>| {
        let pts: Vec<(usize, usize, f64)> = pairs.iter().filter_map(|p| Some((p.n1, p.n2, value(p)?))).collect();
        extrapolate_pairs(&pts).ok()
    };
    let p_c_crossing_extrapolation = extrapolate(&|p| p.crossing.map(|c| c.p_c));
    let p_c_collapse_extrapolation = extrapolate(&|p| p.collapse.map(|c| c.p_c));
    let nu_extrapolation = extrapolate(&|p| p.collapse.map(|c| c.nu));
    let (bootstrap, bootstrap_error) = match opts.bootstrap {
        None => (None, None),
        Some((resamples, subsample, seed)) => {
            let grid = CollapseGrid { p_c: opts.p_c_grid.clone(), nu: opts.nu_grid.clone() };
            split(bootstrap_extrapolation(raw, resamples, subsample, &grid, &mut seeded(seed)))
        }
    };
    CollapseReport {
        pairs,
        p_c_crossing_extrapolation,
        p_c_collapse_extrapolation,
        nu_extrapolation,
        bootstrap,
        bootstrap_error,
    }
}
