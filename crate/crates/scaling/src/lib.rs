//! Finite-size scaling analysis for monitored-circuit ensembles.
//!
//! Conformal distance scales on a periodic chain, weighted power-law fits of
//! correlation decay, crossing and collapse of tripartite-information curves,
//! bootstrap error estimates for the large-size extrapolations, and
//! consistency checks on fitted exponents.

pub mod bootstrap;
pub mod bounds;
pub mod collapse;
pub mod crossing;
pub mod error;
pub mod extrapolate;
pub mod fit;
pub mod geometry;
pub mod series;
pub mod spline;

pub use error::{Error, Result};
pub use series::{CurvePoint, DecayPoint, DecaySeries, Metric, ScalingCurve};
