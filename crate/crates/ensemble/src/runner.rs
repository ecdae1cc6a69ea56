//! Seeded, sharded, checkpointed ensemble execution.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use mipt_core::circuit::{run_realization, MAX_RESAMPLE_ATTEMPTS};

use crate::accumulator::EnsembleAccumulator;
use crate::config::{RunConfig, RunHeader};
use crate::error::{Error, Result};
use crate::export;
use crate::observable::{Evaluator, ObsMetric, ObservableKey};
use crate::persist::{self, FileKind};

pub const CHECKPOINT_FILE: &str = "checkpoint.mipt";
pub const AGGREGATE_FILE: &str = "aggregate.mipt";
/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "MIPT_THREADS";
/// Largest tolerated fraction of unconverged SDP solves.
pub const UNCONVERGED_BUDGET: f64 = 1e-3;

/// Outcome of [`run_chunks`].
#[derive(Debug)]
pub enum Progress {
    /// The shard finished; the aggregate and exports are written.
    Finished(Box<EnsembleAccumulator>),
    /// Stopped after the requested number of chunks with a checkpoint on disk.
    Paused { next_index: u64 },
}

/// Evaluates every key at every translate of one realization.
pub fn process_realization(
    header: &RunHeader,
    keys: &[ObservableKey],
    index: u64,
    evaluator: &mut Evaluator,
    acc: &mut EnsembleAccumulator,
) -> Result<()> {
    let real = match run_realization(&header.circuit_config(index)) {
        Ok(r) => r,
        Err(mipt_core::Error::DegenerateBranch { .. }) => {
            log::warn!("realization {index} discarded after {MAX_RESAMPLE_ATTEMPTS} degenerate attempts");
            acc.counters.discarded_realizations += 1;
            acc.counters.resampled_attempts += u64::from(MAX_RESAMPLE_ATTEMPTS);
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    acc.counters.realizations += 1;
    acc.counters.resampled_attempts += u64::from(real.discarded);
    let n = header.n_qubits;
    for key in keys {
        let translates = key.translates(n);
        let mut total = 0.0;
        for start in 0..translates {
            let e = evaluator.evaluate(key, &real.state, start)?;
            if e.sdp_solved {
                acc.counters.sdp_solves += 1;
                acc.counters.unconverged_sdp += u64::from(!e.converged);
            }
            acc.stats.get_mut(key).expect("key registered").push(e.value);
            total += e.value;
            if let Some(grid) = acc.grids.get_mut(key) {
                match key.metric {
                    ObsMetric::Mi => grid.accumulate_mi(&real.record, key.k, e.value, start)?,
                    ObsMetric::TmiQuarters => grid.accumulate_mi(&real.record, 3, e.value, start)?,
                    ObsMetric::Gmn | ObsMetric::HalfChainEntropy => {
                        grid.accumulate_shifted(&real.record, key.grid_weight(e.value).0, start)?
                    }
                }
            }
        }
        if let Some(raw) = acc.raw.get_mut(key) {
            raw.push((index, total / translates as f64));
        }
    }
    Ok(())
}

fn keys_of(header: &RunHeader) -> Result<Vec<ObservableKey>> {
    let mut keys: Vec<ObservableKey> =
        header.observables()?.iter().flat_map(|s| s.keys(header.n_qubits)).collect();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys)
}

/// Runs realizations `[lo, hi)` on the current rayon pool. The result does
/// not depend on how the range is split between workers.
pub fn run_range(header: &RunHeader, lo: u64, hi: u64) -> Result<EnsembleAccumulator> {
    let keys = keys_of(header)?;
    let empty = EnsembleAccumulator::new(header.clone())?;
    let fresh = || (Evaluator::new(), empty.clone());
    let (_, mut acc) = (lo..hi)
        .into_par_iter()
        .try_fold(fresh, |(mut ev, mut acc), index| {
            process_realization(header, &keys, index, &mut ev, &mut acc)?;
            Ok::<_, Error>((ev, acc))
        })
        .try_reduce(fresh, |(ev, mut a), (_, b)| {
            a.merge(&b)?;
            Ok((ev, a))
        })?;
    acc.cover(lo, hi)?;
    Ok(acc)
}

/// Thread pool sized by `MIPT_THREADS`, or rayon's default when unset.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))
}

fn load_checkpoint(path: &Path, header: &RunHeader, lo: u64, hi: u64) -> Result<Option<EnsembleAccumulator>> {
    if !path.exists() {
        return Ok(None);
    }
    let (acc, kind) = persist::load(path)?;
    if kind != FileKind::Checkpoint {
        return Err(Error::format(path, "not a checkpoint"));
    }
    if acc.header != *header {
        return Err(Error::Config(format!("{} belongs to a different run configuration", path.display())));
    }
    match acc.covered.as_slice() {
        [] => {}
        [(a, b)] if *a == lo && *b <= hi => {}
        other => {
            return Err(Error::Config(format!(
                "{} covers {other:?}, which is not a prefix of shard range {lo}..{hi}",
                path.display()
            )))
        }
    }
    Ok(Some(acc))
}

/// Runs (or resumes) the configured shard, stopping after `max_chunks`
/// checkpoint intervals when given.
pub fn run_chunks(config: &RunConfig, max_chunks: Option<usize>) -> Result<Progress> {
    let mut config = config.clone();
    config.validate()?;
    let header = &config.header;
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let checkpoint = config.out_dir.join(CHECKPOINT_FILE);
    let (lo, hi) = config.shard.range(header.circuits_total);

    let mut acc = match load_checkpoint(&checkpoint, header, lo, hi)? {
        Some(acc) => {
            log::info!("resuming from {} ({} realizations done)", checkpoint.display(), acc.covered_count());
            acc
        }
        None => EnsembleAccumulator::new(header.clone())?,
    };
    let mut next = acc.covered.first().map_or(lo, |r| r.1);

    let pool = thread_pool()?;
    let mut chunks = 0;
    while next < hi {
        if max_chunks.is_some_and(|m| chunks >= m) {
            return Ok(Progress::Paused { next_index: next });
        }
        let end = hi.min(next.saturating_add(config.checkpoint_every));
        let part = pool.install(|| run_range(header, next, end))?;
        acc.merge(&part)?;
        persist::save(&checkpoint, &acc, FileKind::Checkpoint)?;
        log::info!("realizations {lo}..{end} of shard range {lo}..{hi} done");
        next = end;
        chunks += 1;
    }

    finish(&config.out_dir, &acc)?;
    if checkpoint.exists() {
        fs::remove_file(&checkpoint).map_err(|e| Error::io(&checkpoint, e))?;
    }
    check_budget(&acc)?;
    Ok(Progress::Finished(Box::new(acc)))
}

/// Runs the configured shard to completion.
pub fn run_shard(config: &RunConfig) -> Result<EnsembleAccumulator> {
    match run_chunks(config, None)? {
        Progress::Finished(acc) => Ok(*acc),
        Progress::Paused { .. } => unreachable!("unbounded runs always finish"),
    }
}

/// Writes the aggregate file and every export into `dir`.
pub fn finish(dir: &Path, acc: &EnsembleAccumulator) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(AGGREGATE_FILE);
    persist::save(&path, acc, FileKind::Aggregate)?;
    export::write_all(dir, acc)?;
    Ok(path)
}

/// Fails when more than 0.1% of SDP solves did not converge.
pub fn check_budget(acc: &EnsembleAccumulator) -> Result<()> {
    if acc.unconverged_fraction() > UNCONVERGED_BUDGET {
        return Err(Error::NumericalBudget {
            unconverged: acc.counters.unconverged_sdp,
            total: acc.counters.sdp_solves,
        });
    }
    Ok(())
}

/// Merges aggregate files of one run (any shard layout, any order).
pub fn merge_files(paths: &[PathBuf]) -> Result<EnsembleAccumulator> {
    let mut merged: Option<EnsembleAccumulator> = None;
    for path in paths {
        let (acc, _) = persist::load(path)?;
        match &mut merged {
            None => merged = Some(acc),
            Some(m) => m.merge(&acc).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            })?,
        }
    }
    merged.ok_or_else(|| Error::Config("no input files".into()))
}
