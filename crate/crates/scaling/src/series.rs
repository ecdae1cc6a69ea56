//! Curve containers shared by the fitting and collapse routines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Metric {
    Mi,
    Gmn,
    PEnt,
    NMag,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Mi => "MI",
            Metric::Gmn => "GMN",
            Metric::PEnt => "P_ENT",
            Metric::NMag => "N_MAG",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "MI" => Ok(Metric::Mi),
            "GMN" => Ok(Metric::Gmn),
            "P_ENT" => Ok(Metric::PEnt),
            "N_MAG" => Ok(Metric::NMag),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub d: f64,
    pub mean: f64,
    pub stderr: f64,
}

/// Ensemble-averaged correlation against the conformal distance scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub n_qubits: usize,
    pub k_parties: usize,
    pub metric: Metric,
    points: Vec<DecayPoint>,
}

impl DecaySeries {
    /// Sorts the points by `d`; every `d` must be positive.
    pub fn new(n_qubits: usize, k_parties: usize, metric: Metric, mut points: Vec<DecayPoint>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !(p.d > 0.0)) {
            return Err(Error::Config(format!("distance scale {} is not positive", p.d)));
        }
        points.sort_by(|a, b| a.d.total_cmp(&b.d));
        Ok(Self { n_qubits, k_parties, metric, points })
    }

    pub fn points(&self) -> &[DecayPoint] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p: f64,
    pub mean: f64,
    pub stderr: f64,
    pub sample_count: u64,
}

/// An observable (typically the averaged tripartite information) against the
/// measurement rate at fixed system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub n_qubits: usize,
    points: Vec<CurvePoint>,
}

impl ScalingCurve {
    /// Sorts the points by `p`; averages of more than one sample need a
    /// positive standard error.
    pub fn new(n_qubits: usize, mut points: Vec<CurvePoint>) -> Result<Self> {
        if let Some(pt) = points.iter().find(|pt| pt.sample_count > 1 && !(pt.stderr > 0.0)) {
            return Err(Error::Config(format!("point at p = {} has stderr {} over {} samples", pt.p, pt.stderr, pt.sample_count)));
        }
        if points.iter().any(|pt| !pt.p.is_finite() || !pt.mean.is_finite()) {
            return Err(Error::Config("curve points must be finite".into()));
        }
        points.sort_by(|a, b| a.p.total_cmp(&b.p));
        if points.windows(2).any(|w| w[0].p == w[1].p) {
            return Err(Error::Config("curve has repeated p values".into()));
        }
        Ok(Self { n_qubits, points })
    }

    /// Builds a curve from raw per-realization samples at each `p`.
    pub fn from_samples(n_qubits: usize, samples: &[(f64, Vec<f64>)]) -> Result<Self> {
        let points = samples
            .iter()
            .map(|(p, values)| {
                let (mean, stderr) = mean_stderr(values);
                CurvePoint { p: *p, mean, stderr, sample_count: values.len() as u64 }
            })
            .collect();
        Self::new(n_qubits, points)
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn p_range(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.p, self.points.last()?.p))
    }
}

/// Sample mean and standard error `s / √n` (zero error for fewer than two samples).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_sorted_and_validated() {
        let pts = vec![DecayPoint { d: 2.0, mean: 1.0, stderr: 0.1 }, DecayPoint { d: 1.0, mean: 2.0, stderr: 0.1 }];
        let s = DecaySeries::new(12, 2, Metric::Mi, pts).unwrap();
        assert_eq!(s.points()[0].d, 1.0);
        assert!(DecaySeries::new(12, 2, Metric::Mi, vec![DecayPoint { d: 0.0, mean: 1.0, stderr: 0.1 }]).is_err());
    }

    #[test]
    fn curve_requires_errors() {
        let bad = CurvePoint { p: 0.1, mean: 0.0, stderr: 0.0, sample_count: 5 };
        assert!(ScalingCurve::new(12, vec![bad]).is_err());
        let single = CurvePoint { p: 0.1, mean: 0.0, stderr: 0.0, sample_count: 1 };
        assert!(ScalingCurve::new(12, vec![single]).is_ok());
    }

    #[test]
    fn stderr_arithmetic() {
        let (m, e) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((e - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in [Metric::Mi, Metric::Gmn, Metric::PEnt, Metric::NMag] {
            assert_eq!(Metric::parse(m.name()).unwrap(), m);
        }
    }
}
