//! Observable specifications, their region layouts and evaluation.

use std::fmt;

use serde::{Deserialize, Serialize};

use mipt_core::correlations::{half_chain_entropy, mutual_information_k, tmi_quarters_at, RegionSet};
use mipt_core::monotones::GmnSolver;
use mipt_core::StateVector;
use mipt_scaling::geometry::{asymmetric_gaps, distance_scale, symmetric_gaps};

use crate::error::{Error, Result};

/// Largest union of single-site parties for an MI evaluation.
pub const MAX_MI_SITES: usize = mipt_core::statevector::MAX_RDM_SITES;
/// Largest number of single-qubit parties for a GMN evaluation.
pub const MAX_GMN_PARTIES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ObsMetric {
    Mi,
    Gmn,
    TmiQuarters,
    HalfChainEntropy,
}

impl ObsMetric {
    pub fn name(self) -> &'static str {
        match self {
            ObsMetric::Mi => "MI",
            ObsMetric::Gmn => "GMN",
            ObsMetric::TmiQuarters => "TMI_QUARTERS",
            ObsMetric::HalfChainEntropy => "HALF_CHAIN_ENTROPY",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [ObsMetric::Mi, ObsMetric::Gmn, ObsMetric::TmiQuarters, ObsMetric::HalfChainEntropy].get(c as usize).copied()
    }

    fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mi" => Ok(ObsMetric::Mi),
            "gmn" => Ok(ObsMetric::Gmn),
            "tmi" | "tmi_quarters" => Ok(ObsMetric::TmiQuarters),
            "half" | "half_chain_entropy" => Ok(ObsMetric::HalfChainEntropy),
            other => Err(Error::Config(format!("unknown observable {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Layout {
    /// Parties at `i, i+x, …, i+(k-1)x`.
    Symmetric,
    /// Three parties at `i, i+x, i+2x+1`.
    Asymmetric,
    /// Four contiguous quarters.
    Quarters,
    /// Half of the chain.
    Half,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::Symmetric => "sym",
            Layout::Asymmetric => "asym",
            Layout::Quarters => "quarters",
            Layout::Half => "half",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [Layout::Symmetric, Layout::Asymmetric, Layout::Quarters, Layout::Half].get(c as usize).copied()
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sym" => Ok(Layout::Symmetric),
            "asym" => Ok(Layout::Asymmetric),
            "quarters" => Ok(Layout::Quarters),
            "half" => Ok(Layout::Half),
            other => Err(Error::Config(format!("unknown layout {other:?}"))),
        }
    }
}

/// One requested observable family, before expansion over `x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub metric: ObsMetric,
    pub k: usize,
    pub layout: Layout,
    /// Inclusive separation range; `None` means every separation that fits.
    pub x_range: Option<(usize, usize)>,
    /// Also accumulate an entanglement-weighted grid for each key.
    pub ewg: bool,
}

/// A single aggregation key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObservableKey {
    pub metric: ObsMetric,
    pub k: usize,
    pub layout: Layout,
    pub x: usize,
}

impl fmt::Display for ObservableKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_k{}_{}_x{}", self.metric.name(), self.k, self.layout.name(), self.x)
    }
}

/// Parses `item;item;…` with `item = metric[:k=K][:sym|:asym][:x=A|:x=A..B][:ewg]`.
///
/// Metrics are `mi`, `gmn`, `tmi` (quarters) and `half` (half-chain entropy).
pub fn parse_observables(spec: &str) -> Result<Vec<ObservableSpec>> {
    let mut out = Vec::new();
    for item in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let mut fields = item.split(':').map(str::trim);
        let metric = ObsMetric::parse(fields.next().unwrap_or_default())?;
        let (mut k, mut layout) = match metric {
            ObsMetric::Mi | ObsMetric::Gmn => (2, Layout::Symmetric),
            ObsMetric::TmiQuarters => (4, Layout::Quarters),
            ObsMetric::HalfChainEntropy => (2, Layout::Half),
        };
        let mut x_range = None;
        let mut ewg = false;
        for field in fields {
            let bad = || Error::Config(format!("cannot parse {field:?} in observable {item:?}"));
            if let Some(v) = field.strip_prefix("k=") {
                k = v.parse().map_err(|_| bad())?;
            } else if let Some(v) = field.strip_prefix("x=") {
                x_range = Some(match v.split_once("..") {
                    Some((a, b)) => (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?),
                    None => {
                        let x = v.parse().map_err(|_| bad())?;
                        (x, x)
                    }
                });
            } else if field == "sym" || field == "asym" {
                layout = Layout::parse(field)?;
            } else if field == "ewg" {
                ewg = true;
            } else {
                return Err(bad());
            }
        }
        if matches!(metric, ObsMetric::TmiQuarters | ObsMetric::HalfChainEntropy)
            && (x_range.is_some() || !matches!(layout, Layout::Quarters | Layout::Half))
        {
            return Err(Error::Config(format!("{item:?}: {} takes no layout or separation", metric.name())));
        }
        out.push(ObservableSpec { metric, k, layout, x_range, ewg });
    }
    if out.is_empty() {
        return Err(Error::Config("no observables requested".into()));
    }
    Ok(out)
}

impl ObservableSpec {
    /// Canonical spec-string form.
    pub fn to_spec_string(&self) -> String {
        let mut s = match self.metric {
            ObsMetric::Mi => "mi",
            ObsMetric::Gmn => "gmn",
            ObsMetric::TmiQuarters => "tmi",
            ObsMetric::HalfChainEntropy => "half",
        }
        .to_string();
        if matches!(self.metric, ObsMetric::Mi | ObsMetric::Gmn) {
            s += &format!(":k={}:{}", self.k, self.layout.name());
            if let Some((a, b)) = self.x_range {
                s += &format!(":x={a}..{b}");
            }
        }
        if self.ewg {
            s += ":ewg";
        }
        s
    }

    fn x_fits(&self, x: usize, n: usize) -> bool {
        match self.layout {
            Layout::Symmetric => x >= 1 && self.k * x <= n,
            Layout::Asymmetric => x >= 1 && 3 * x + 1 <= n,
            Layout::Quarters | Layout::Half => x == 0,
        }
    }

    /// Checks capacity limits and geometry against an `n`-site chain.
    pub fn validate(&self, n: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("{}: {msg}", self.to_spec_string())));
        match self.metric {
            ObsMetric::Mi if !(2..=MAX_MI_SITES).contains(&self.k) => {
                return fail(format!("MI needs 2 ≤ k ≤ {MAX_MI_SITES} single-site parties"))
            }
            ObsMetric::Gmn if !(2..=MAX_GMN_PARTIES).contains(&self.k) => {
                return fail(format!("GMN needs 2 ≤ k ≤ {MAX_GMN_PARTIES} parties"))
            }
            ObsMetric::TmiQuarters if n % 4 != 0 => return fail(format!("N={n} is not divisible by 4")),
            _ => {}
        }
        if self.layout == Layout::Asymmetric && self.k != 3 {
            return fail("the asymmetric layout has exactly 3 parties".into());
        }
        if let Some((a, b)) = self.x_range {
            if a > b {
                return fail(format!("empty separation range {a}..{b}"));
            }
            if let Some(x) = (a..=b).find(|&x| !self.x_fits(x, n)) {
                return fail(format!("separation x={x} does not fit N={n}"));
            }
        }
        if self.keys(n).is_empty() {
            return fail(format!("no separation fits N={n}"));
        }
        Ok(())
    }

    pub fn keys(&self, n: usize) -> Vec<ObservableKey> {
        let xs: Vec<usize> = match (self.layout, self.x_range) {
            (Layout::Quarters | Layout::Half, _) => vec![0],
            (_, Some((a, b))) => (a..=b).collect(),
            (_, None) => (1..=n).filter(|&x| self.x_fits(x, n)).collect(),
        };
        xs.into_iter()
            .filter(|&x| self.x_fits(x, n))
            .map(|x| ObservableKey { metric: self.metric, k: self.k, layout: self.layout, x })
            .collect()
    }
}

impl ObservableKey {
    /// Translates evaluated per realization. When the parties split the ring
    /// into equal gaps, starts differing by the spacing give the same regions.
    pub fn translates(&self, n: usize) -> usize {
        match self.layout {
            Layout::Symmetric if self.k * self.x == n => self.x,
            Layout::Quarters => n / 4,
            Layout::Half => n / 2,
            _ => n,
        }
    }

    pub fn regions(&self, n: usize, start: usize) -> Result<RegionSet> {
        Ok(match self.layout {
            Layout::Symmetric => RegionSet::symmetric(n, self.k, self.x, start, 1)?,
            Layout::Asymmetric => RegionSet::asymmetric(n, self.x, start, 1)?,
            Layout::Quarters => RegionSet::quarters(n, start)?,
            Layout::Half => RegionSet::custom(vec![(0..n / 2).map(|o| (start + o) % n).collect()])?,
        })
    }

    /// Conformal distance scale of the party layout, for decay observables.
    pub fn distance_scale(&self, n: usize) -> Option<f64> {
        let gaps = match self.layout {
            Layout::Symmetric => symmetric_gaps(self.k, self.x, n).ok()?,
            Layout::Asymmetric => asymmetric_gaps(self.x, n).ok()?,
            _ => return None,
        };
        distance_scale(&gaps, n).ok()
    }

    /// EWG weight of one value: `(-1)^k I_k` clamped for MI-type metrics
    /// (the tripartite information counts as `k = 3`), the value otherwise.
    pub fn grid_weight(&self, value: f64) -> (f64, bool) {
        match self.metric {
            ObsMetric::Mi => mipt_core::ewg::mi_weight(self.k, value),
            ObsMetric::TmiQuarters => mipt_core::ewg::mi_weight(3, value),
            ObsMetric::Gmn | ObsMetric::HalfChainEntropy => (value.max(0.0), false),
        }
    }
}

/// Per-worker evaluation state (GMN solvers are reused across realizations).
pub struct Evaluator {
    gmn: Vec<Option<GmnSolver>>,
}

/// One evaluated value, with the SDP convergence flag for GMN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub sdp_solved: bool,
    pub converged: bool,
}

impl Evaluator {
    pub fn new() -> Self {
        Self { gmn: (0..=MAX_GMN_PARTIES).map(|_| None).collect() }
    }

    pub fn evaluate(&mut self, key: &ObservableKey, state: &StateVector, start: usize) -> Result<Evaluation> {
        let n = state.n_qubits();
        let plain = |value| Evaluation { value, sdp_solved: false, converged: true };
        Ok(match key.metric {
            ObsMetric::Mi => plain(mutual_information_k(state, &key.regions(n, start)?)?),
            ObsMetric::TmiQuarters => plain(tmi_quarters_at(state, start)?),
            ObsMetric::HalfChainEntropy => plain(half_chain_entropy(state, start)?),
            ObsMetric::Gmn => {
                let sites = key.regions(n, start)?.union();
                let rho = state.reduced_density_matrix(&sites)?;
                let solver = match &mut self.gmn[key.k] {
                    Some(s) => s,
                    slot => slot.insert(GmnSolver::new(key.k)?),
                };
                let r = solver.gmn(&rho)?;
                Evaluation { value: r.value, sdp_solved: !r.ppt_shortcut, converged: r.converged }
            }
        })
    }
}

impl Default for Evaluator {
    fn default() -> Self {
        Self::new()
    }
}
