//! Von Neumann entropies and k-party mutual information (entropies in bits).

use crate::error::{Error, Result};
use crate::statevector::{DensityMatrix, StateVector, MAX_RDM_SITES};

/// Eigenvalues in `[-EIGEN_CLAMP, 0)` are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-7;

/// `-Σ λ log2 λ` over a spectrum, clamping tiny negative eigenvalues.
pub fn entropy_from_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &lam in eigenvalues {
        if lam < -EIGEN_CLAMP {
            return Err(Error::InvalidDensity(format!("eigenvalue {lam:e} is negative")));
        }
        let lam = lam.clamp(0.0, 1.0);
        if lam > 0.0 {
            s -= lam * lam.log2();
        }
    }
    Ok(s.max(0.0))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let s = entropy_from_spectrum(&rho.eigenvalues())?;
    Ok(s.min(rho.n_sites() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionTag {
    /// Equally spaced parties `{i, i+x, …, i+(k-1)x}`.
    Symmetric { x: usize },
    /// Three parties `{i, i+x, i+2x+1}`.
    Asymmetric { x: usize },
    /// Four contiguous quarters of the chain.
    MacroQuarters,
    Custom,
}

/// `k` disjoint site lists on a periodic chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSet {
    regions: Vec<Vec<usize>>,
    tag: RegionTag,
}

fn block(start: usize, width: usize, n: usize) -> Vec<usize> {
    (0..width).map(|o| (start + o) % n).collect()
}

impl RegionSet {
    pub fn new(regions: Vec<Vec<usize>>, tag: RegionTag) -> Result<Self> {
        if regions.is_empty() || regions.iter().any(|r| r.is_empty()) {
            return Err(Error::Config("regions must be non-empty".into()));
        }
        let mut all: Vec<usize> = regions.iter().flatten().copied().collect();
        let total = all.len();
        all.sort_unstable();
        all.dedup();
        if all.len() != total {
            return Err(Error::Config("regions overlap".into()));
        }
        Ok(Self { regions, tag })
    }

    pub fn custom(regions: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(regions, RegionTag::Custom)
    }

    /// `k` parties of `width` sites starting at `i, i+x, …`.
    pub fn symmetric(n: usize, k: usize, x: usize, start: usize, width: usize) -> Result<Self> {
        if x == 0 || width == 0 || k < 2 || k * x > n || x < width {
            return Err(Error::Config(format!(
                "symmetric configuration k={k} x={x} width={width} does not fit N={n}"
            )));
        }
        let regions = (0..k).map(|p| block(start + p * x, width, n)).collect();
        Self::new(regions, RegionTag::Symmetric { x })
    }

    /// Parties at `i, i+x, i+2x+1`.
    pub fn asymmetric(n: usize, x: usize, start: usize, width: usize) -> Result<Self> {
        if x == 0 || width == 0 || 3 * x + 1 > n || x < width {
            return Err(Error::Config(format!(
                "asymmetric configuration x={x} width={width} does not fit N={n}"
            )));
        }
        let regions = [0, x, 2 * x + 1].iter().map(|&o| block(start + o, width, n)).collect();
        Self::new(regions, RegionTag::Asymmetric { x })
    }

    /// Quarters `A, B, C, D` starting at `start`.
    pub fn quarters(n: usize, start: usize) -> Result<Self> {
        if n % 4 != 0 || n == 0 {
            return Err(Error::Config(format!("N={n} is not divisible by 4")));
        }
        let q = n / 4;
        let regions = (0..4).map(|p| block(start + p * q, q, n)).collect();
        Self::new(regions, RegionTag::MacroQuarters)
    }

    pub fn regions(&self) -> &[Vec<usize>] {
        &self.regions
    }

    pub fn k(&self) -> usize {
        self.regions.len()
    }

    pub fn tag(&self) -> RegionTag {
        self.tag
    }

    /// All sites, party by party.
    pub fn union(&self) -> Vec<usize> {
        self.regions.iter().flatten().copied().collect()
    }

    pub fn party_sizes(&self) -> Vec<usize> {
        self.regions.iter().map(Vec::len).collect()
    }

    /// Cyclic gaps between the first sites of consecutive parties.
    pub fn party_gaps(&self, n: usize) -> Vec<usize> {
        let k = self.regions.len();
        (0..k)
            .map(|p| {
                let a = self.regions[p][0];
                let b = self.regions[(p + 1) % k][0];
                let g = (b + n - a) % n;
                if g == 0 {
                    n
                } else {
                    g
                }
            })
            .collect()
    }
}

/// Tensor factors (within the union RDM) belonging to each party.
pub fn party_factors(party_sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut next = 0;
    party_sizes
        .iter()
        .map(|&w| {
            let f: Vec<usize> = (next..next + w).collect();
            next += w;
            f
        })
        .collect()
}

/// `I_k` from the RDM of the union, whose factors are grouped party by party
/// with the given sizes.
pub fn mutual_information_from_rdm(rho_union: &DensityMatrix, party_sizes: &[usize]) -> Result<f64> {
    let k = party_sizes.len();
    if party_sizes.iter().sum::<usize>() != rho_union.n_sites() {
        return Err(Error::Config("party sizes do not match the RDM".into()));
    }
    let parties = party_factors(party_sizes);
    let mut total = 0.0;
    for mask in 1u32..(1 << k) {
        let keep: Vec<usize> = (0..k)
            .filter(|p| mask & (1 << p) != 0)
            .flat_map(|p| parties[p].iter().copied())
            .collect();
        let s = if keep.len() == rho_union.n_sites() {
            von_neumann_entropy(rho_union)?
        } else {
            von_neumann_entropy(&rho_union.partial_trace_keep(&keep)?)?
        };
        let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * s;
    }
    Ok(total)
}

/// `I_k(A_1, …, A_k) = Σ_{∅≠T} (-1)^{|T|+1} S(∪_{i∈T} A_i)`.
pub fn mutual_information_k(state: &StateVector, regions: &RegionSet) -> Result<f64> {
    let union = regions.union();
    if union.len() > MAX_RDM_SITES {
        return Err(Error::Capacity(format!(
            "union of {} sites exceeds {MAX_RDM_SITES}",
            union.len()
        )));
    }
    let rho = state.reduced_density_matrix(&union)?;
    mutual_information_from_rdm(&rho, &regions.party_sizes())
}

/// Entropy of an arbitrary subset of a pure state, evaluated on the smaller
/// side of the cut.
pub fn subset_entropy(state: &StateVector, sites: &[usize]) -> Result<f64> {
    entropy_from_spectrum(&state.reduced_spectrum(sites)?)
}

/// Tripartite mutual information `I_3(A, B, C)` of the quarter partition
/// starting at `start`.
pub fn tmi_quarters_at(state: &StateVector, start: usize) -> Result<f64> {
    let q = RegionSet::quarters(state.n_qubits(), start)?;
    let r = q.regions();
    let mut total = 0.0;
    for mask in 1u32..8 {
        let sites: Vec<usize> = (0..3).filter(|p| mask & (1 << p) != 0).flat_map(|p| r[p].clone()).collect();
        let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * subset_entropy(state, &sites)?;
    }
    Ok(total)
}

pub fn tmi_quarters(state: &StateVector) -> Result<f64> {
    tmi_quarters_at(state, 0)
}

/// Entropy of the `N/2` contiguous sites starting at `start`.
pub fn half_chain_entropy(state: &StateVector, start: usize) -> Result<f64> {
    let n = state.n_qubits();
    let sites = block(start, n / 2, n);
    subset_entropy(state, &sites)
}
