//! CSV and JSON exports of an aggregate.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::accumulator::{hist_edges, Counters, EnsembleAccumulator, Stat, HIST_BINS, HIST_MAX, HIST_MIN};
use crate::config::RunHeader;
use crate::error::{Error, Result};
use crate::observable::{ObsMetric, ObservableKey};

pub const STATS_FILE: &str = "stats.csv";
pub const DECAY_FILE: &str = "decay.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const RAW_FILE: &str = "raw.csv";
pub const RUN_FILE: &str = "run.json";

pub const DECAY_COLUMNS: [&str; 11] =
    ["N", "p", "metric", "k", "config", "x", "d", "mean", "stderr", "count", "nonzero_count"];
pub const STATS_COLUMNS: [&str; 15] = [
    "N", "p", "metric", "k", "config", "x", "count", "zero_count", "nonzero_count", "mean", "stderr", "p_ent",
    "p_ent_stderr", "n_mag", "n_mag_stderr",
];

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

fn key_fields(h: &RunHeader, key: &ObservableKey) -> [String; 6] {
    [
        h.n_qubits.to_string(),
        h.p_measure.to_string(),
        key.metric.name().to_string(),
        key.k.to_string(),
        key.layout.name().to_string(),
        key.x.to_string(),
    ]
}

/// One row of the decay export.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub metric: &'static str,
    pub key: ObservableKey,
    pub d: f64,
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    pub nonzero_count: u64,
}

/// Decay rows for every MI and GMN key with data; GMN keys also yield the
/// `P_ENT` and `N_MAG` components.
pub fn decay_rows(acc: &EnsembleAccumulator) -> Vec<DecayRow> {
    let n = acc.header.n_qubits;
    let mut rows = Vec::new();
    for (key, s) in acc.stats.iter().filter(|(_, s)| s.count > 0) {
        let Some(d) = key.distance_scale(n) else { continue };
        let row = |metric, mean, stderr| DecayRow {
            metric,
            key: *key,
            d,
            mean,
            stderr,
            count: s.count,
            nonzero_count: s.nonzero_count,
        };
        match key.metric {
            ObsMetric::Mi => rows.push(row("MI", s.mean(), s.stderr())),
            ObsMetric::Gmn => {
                let parts = s.decompose();
                rows.push(row("GMN", parts.mean, s.stderr()));
                rows.push(row("P_ENT", parts.p_ent, s.p_ent_stderr()));
                rows.push(row("N_MAG", parts.n_mag, s.n_mag_stderr()));
            }
            _ => {}
        }
    }
    rows
}

pub fn write_decay(path: &Path, acc: &EnsembleAccumulator) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(DECAY_COLUMNS).map_err(|e| csv_error(path, e))?;
    let h = &acc.header;
    for r in decay_rows(acc) {
        let [n, p, _, k, config, x] = key_fields(h, &r.key);
        let record = [
            n,
            p,
            r.metric.to_string(),
            k,
            config,
            x,
            r.d.to_string(),
            r.mean.to_string(),
            r.stderr.to_string(),
            r.count.to_string(),
            r.nonzero_count.to_string(),
        ];
        w.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_stats(path: &Path, acc: &EnsembleAccumulator) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(STATS_COLUMNS).map_err(|e| csv_error(path, e))?;
    for (key, s) in acc.stats.iter().filter(|(_, s)| s.count > 0) {
        let parts = s.decompose();
        let mut record = key_fields(&acc.header, key).to_vec();
        record.extend([
            s.count.to_string(),
            s.zero_count.to_string(),
            s.nonzero_count.to_string(),
            parts.mean.to_string(),
            s.stderr().to_string(),
            parts.p_ent.to_string(),
            s.p_ent_stderr().to_string(),
            parts.n_mag.to_string(),
            s.n_mag_stderr().to_string(),
        ]);
        w.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Nonzero bins only; zeros are the `zero_count` column of the stats file.
pub fn write_histogram(path: &Path, acc: &EnsembleAccumulator) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["N", "p", "metric", "k", "config", "x", "bin", "lower", "upper", "count"])
        .map_err(|e| csv_error(path, e))?;
    for (key, s) in &acc.stats {
        for (b, &c) in s.histogram.iter().enumerate().filter(|(_, &c)| c > 0) {
            let (lo, hi) = hist_edges(b);
            let mut record = key_fields(&acc.header, key).to_vec();
            record.extend([b.to_string(), lo.to_string(), hi.to_string(), c.to_string()]);
            w.write_record(&record).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-realization values, each the average over that realization's translates.
pub fn write_raw(path: &Path, acc: &EnsembleAccumulator) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["N", "p", "metric", "k", "config", "x", "realization", "value"])
        .map_err(|e| csv_error(path, e))?;
    for (key, values) in &acc.raw {
        let fields = key_fields(&acc.header, key);
        for &(idx, v) in values {
            let mut record = fields.to_vec();
            record.extend([idx.to_string(), v.to_string()]);
            w.write_record(&record).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct RunSummary<'a> {
    header: &'a RunHeader,
    counters: &'a Counters,
    realizations_covered: u64,
    complete: bool,
    unconverged_fraction: f64,
    histogram: HistogramInfo,
}

#[derive(Serialize)]
struct HistogramInfo {
    bins: usize,
    min_magnitude: f64,
    max_magnitude: f64,
    scale: &'static str,
}

pub fn write_run_json(path: &Path, acc: &EnsembleAccumulator) -> Result<()> {
    let summary = RunSummary {
        header: &acc.header,
        counters: &acc.counters,
        realizations_covered: acc.covered_count(),
        complete: acc.is_complete(),
        unconverged_fraction: acc.unconverged_fraction(),
        histogram: HistogramInfo { bins: HIST_BINS, min_magnitude: HIST_MIN, max_magnitude: HIST_MAX, scale: "log10" },
    };
    write_json(path, &summary)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Metadata written next to each pair of EWG grid files.
#[derive(Debug, Serialize)]
pub struct EwgSidecar {
    pub n_qubits: usize,
    pub p: f64,
    pub metric: &'static str,
    pub k: usize,
    pub config: &'static str,
    pub x: usize,
    /// Party sites of the canonical (start 0) region set; grid columns are
    /// aligned to it.
    pub regions: Vec<Vec<usize>>,
    pub weight_total: f64,
    pub realization_count: u64,
    pub sign_violations: u64,
    pub n_layers: usize,
    /// Row index of the final layer, measured at `final_layer_measure_prob`.
    pub final_layer: usize,
    pub final_layer_measure_prob: f64,
    pub weighted_file: Option<String>,
    pub baseline_file: String,
}

fn write_grid(path: &Path, grid: &mipt_core::ewg::RateGrid) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_error(path, e))?;
    for layer in 0..grid.n_layers {
        let row: Vec<String> = grid.row(layer).iter().map(f64::to_string).collect();
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `ewg_<key>_weighted.csv`, `ewg_<key>_baseline.csv` and
/// `ewg_<key>.json` for every grid. A grid without weight gets no weighted file.
pub fn write_ewg(dir: &Path, acc: &EnsembleAccumulator) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let h = &acc.header;
    for (key, grid) in &acc.grids {
        let stem = format!("ewg_{key}");
        let baseline_file = format!("{stem}_baseline.csv");
        let weighted_file = match grid.finalize() {
            Ok((weighted, _)) => {
                let name = format!("{stem}_weighted.csv");
                write_grid(&dir.join(&name), &weighted)?;
                Some(name)
            }
            Err(mipt_core::Error::EmptyWeight) => {
                log::warn!("{key}: no weight collected, weighted grid not written");
                None
            }
            Err(e) => return Err(e.into()),
        };
        write_grid(&dir.join(&baseline_file), &grid.baseline())?;
        let regions = key.regions(h.n_qubits, 0)?.regions().to_vec();
        let sidecar = EwgSidecar {
            n_qubits: h.n_qubits,
            p: h.p_measure,
            metric: key.metric.name(),
            k: key.k,
            config: key.layout.name(),
            x: key.x,
            regions,
            weight_total: grid.weight_total(),
            realization_count: grid.realization_count(),
            sign_violations: grid.sign_violations(),
            n_layers: grid.n_layers(),
            final_layer: grid.n_layers() - 1,
            final_layer_measure_prob: h.final_layer_measure_prob,
            weighted_file,
            baseline_file,
        };
        let path = dir.join(format!("{stem}.json"));
        write_json(&path, &sidecar)?;
        written.push(path);
    }
    Ok(written)
}

/// Every export of an aggregate.
pub fn write_all(dir: &Path, acc: &EnsembleAccumulator) -> Result<()> {
    write_stats(&dir.join(STATS_FILE), acc)?;
    write_decay(&dir.join(DECAY_FILE), acc)?;
    write_histogram(&dir.join(HISTOGRAM_FILE), acc)?;
    if !acc.raw.is_empty() {
        write_raw(&dir.join(RAW_FILE), acc)?;
    }
    write_ewg(dir, acc)?;
    write_run_json(&dir.join(RUN_FILE), acc)
}

/// Magnitude-weighted histogram sum, a bin-resolution estimate of `Σ|v|`
/// over the nonzero values.
pub fn histogram_magnitude_sum(s: &Stat) -> f64 {
    s.histogram
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let (lo, hi) = hist_edges(b);
            c as f64 * (lo * hi).sqrt()
        })
        .sum()
}
