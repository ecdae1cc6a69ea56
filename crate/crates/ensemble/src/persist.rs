//! Compact binary form of an [`EnsembleAccumulator`].
//!
//! Layout (little-endian): magic `MIPT`, `u32` version, `u8` kind, `u32`
//! length plus JSON run header, covered ranges, counters, then the
//! per-key statistics, grids and raw samples in key order.

use std::fs;
use std::path::Path;

use mipt_core::ewg::WeightedGridAccumulator;
use mipt_core::exact::ExactSum;

use crate::accumulator::{union_ranges, Counters, EnsembleAccumulator, Stat, HIST_BINS};
use crate::config::RunHeader;
use crate::error::{Error, Result};
use crate::observable::{Layout, ObsMetric, ObservableKey};

pub const MAGIC: &[u8; 4] = b"MIPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Aggregate = 1,
    Checkpoint = 2,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn exact(&mut self, v: &ExactSum) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("section longer than u32::MAX"));
    }
    fn key(&mut self, k: &ObservableKey) {
        self.u8(k.metric.code());
        self.u32(k.k as u32);
        self.u8(k.layout.code());
        self.u32(k.x as u32);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated file")?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn array<const N: usize>(&mut self) -> std::result::Result<[u8; N], String> {
        Ok(self.take(N)?.try_into().expect("slice length"))
    }
    fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn exact(&mut self) -> std::result::Result<ExactSum, String> {
        Ok(ExactSum::from_le_bytes(self.array()?))
    }
    fn len(&mut self) -> std::result::Result<usize, String> {
        Ok(self.u32()? as usize)
    }
    fn key(&mut self) -> std::result::Result<ObservableKey, String> {
        let metric = ObsMetric::from_code(self.u8()?).ok_or("unknown metric code")?;
        let k = self.u32()? as usize;
        let layout = Layout::from_code(self.u8()?).ok_or("unknown layout code")?;
        let x = self.u32()? as usize;
        Ok(ObservableKey { metric, k, layout, x })
    }
}

pub fn encode(acc: &EnsembleAccumulator, kind: FileKind) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u8(kind as u8);
    let header = serde_json::to_vec(&acc.header).expect("header serializes");
    w.len(header.len());
    w.0.extend_from_slice(&header);

    w.len(acc.covered.len());
    for &(lo, hi) in &acc.covered {
        w.u64(lo);
        w.u64(hi);
    }
    let c = &acc.counters;
    for v in [c.realizations, c.discarded_realizations, c.resampled_attempts, c.sdp_solves, c.unconverged_sdp] {
        w.u64(v);
    }

    w.len(acc.stats.len());
    for (key, s) in &acc.stats {
        w.key(key);
        w.exact(&s.sum);
        w.exact(&s.sum_sq);
        w.u64(s.count);
        w.u64(s.zero_count);
        w.u64(s.nonzero_count);
        w.exact(&s.sum_nonzero);
        s.histogram.iter().for_each(|&b| w.u64(b));
    }

    w.len(acc.grids.len());
    for (key, g) in &acc.grids {
        w.key(key);
        w.u32(g.n_layers() as u32);
        w.u32(g.n_sites() as u32);
        g.weighted_sums().iter().for_each(|s| w.exact(s));
        w.exact(&g.weight_sum());
        g.unweighted_sums().iter().for_each(|&c| w.u64(c));
        w.u64(g.realization_count());
        w.u64(g.sign_violations());
    }

    w.len(acc.raw.len());
    for (key, values) in &acc.raw {
        w.key(key);
        w.u64(values.len() as u64);
        for &(idx, v) in values {
            w.u64(idx);
            w.f64(v);
        }
    }
    w.0
}

pub fn decode(bytes: &[u8]) -> std::result::Result<(EnsembleAccumulator, FileKind), String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err("not a MIPT file (bad magic)".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let kind = match r.u8()? {
        1 => FileKind::Aggregate,
        2 => FileKind::Checkpoint,
        other => return Err(format!("unknown file kind {other}")),
    };
    let n = r.len()?;
    let header: RunHeader = serde_json::from_slice(r.take(n)?).map_err(|e| format!("header: {e}"))?;
    let mut acc = EnsembleAccumulator::new(header).map_err(|e| format!("header: {e}"))?;

    let mut ranges = Vec::new();
    for _ in 0..r.len()? {
        ranges.push((r.u64()?, r.u64()?));
    }
    acc.covered = union_ranges(&[], &ranges).map_err(|e| e.to_string())?;
    acc.counters = Counters {
        realizations: r.u64()?,
        discarded_realizations: r.u64()?,
        resampled_attempts: r.u64()?,
        sdp_solves: r.u64()?,
        unconverged_sdp: r.u64()?,
    };

    let unknown = |key: &ObservableKey| format!("key {key} is not part of this run");
    for _ in 0..r.len()? {
        let key = r.key()?;
        let mut s = Stat {
            sum: r.exact()?,
            sum_sq: r.exact()?,
            count: r.u64()?,
            zero_count: r.u64()?,
            nonzero_count: r.u64()?,
            sum_nonzero: r.exact()?,
            histogram: [0; HIST_BINS],
        };
        for b in s.histogram.iter_mut() {
            *b = r.u64()?;
        }
        if s.count != s.zero_count + s.nonzero_count || s.nonzero_count != s.histogram.iter().sum::<u64>() {
            return Err(format!("inconsistent counts for {key}"));
        }
        *acc.stats.get_mut(&key).ok_or_else(|| unknown(&key))? = s;
    }

    for _ in 0..r.len()? {
        let key = r.key()?;
        let layers = r.u32()? as usize;
        let sites = r.u32()? as usize;
        let cells = layers.checked_mul(sites).ok_or("grid too large")?;
        let weighted = (0..cells).map(|_| r.exact()).collect::<std::result::Result<Vec<_>, _>>()?;
        let total = r.exact()?;
        let unweighted = (0..cells).map(|_| r.u64()).collect::<std::result::Result<Vec<_>, _>>()?;
        let grid = WeightedGridAccumulator::from_parts(layers, sites, weighted, total, unweighted, r.u64()?, r.u64()?)
            .map_err(|e| e.to_string())?;
        let slot = acc.grids.get_mut(&key).ok_or_else(|| unknown(&key))?;
        if (slot.n_layers(), slot.n_sites()) != (layers, sites) {
            return Err(format!("grid {key} has shape {layers}x{sites}"));
        }
        *slot = grid;
    }

    for _ in 0..r.len()? {
        let key = r.key()?;
        let len = r.u64()?;
        let mut values = Vec::with_capacity(len.min(1 << 20) as usize);
        for _ in 0..len {
            values.push((r.u64()?, r.f64()?));
        }
        *acc.raw.get_mut(&key).ok_or_else(|| unknown(&key))? = values;
    }
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok((acc, kind))
}

/// Writes through a temporary file and a rename, so a crash leaves either
/// the previous file or the new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn save(path: &Path, acc: &EnsembleAccumulator, kind: FileKind) -> Result<()> {
    write_atomic(path, &encode(acc, kind))
}

pub fn load(path: &Path) -> Result<(EnsembleAccumulator, FileKind)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::format(path, reason))
}
