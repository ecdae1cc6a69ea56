//! Ensemble execution for monitored-circuit studies.
//!
//! Runs seeded realizations in parallel, evaluates the requested correlation
//! observables at every translate, and streams the values into exact,
//! mergeable aggregates that are checkpointed, persisted, exported and fed
//! into the scaling analysis.

pub mod accumulator;
pub mod analysis;
pub mod config;
pub mod error;
pub mod export;
pub mod observable;
pub mod persist;
pub mod runner;

pub use accumulator::{Decomposition, EnsembleAccumulator, Stat};
pub use config::{GateChoice, RunConfig, RunHeader, Shard};
pub use error::{Error, Result};
pub use observable::{parse_observables, ObservableKey, ObservableSpec};
