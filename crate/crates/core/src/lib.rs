//! Monitored quantum circuit simulation and multiparty entanglement measures.
//!
//! The crate covers a dense statevector simulator for brickwork hybrid
//! circuits, von Neumann entropies and k-party mutual information, partial
//! transposes, negativity, the genuine multiparty negativity (via the dense
//! SDP solver in [`sdp`]) and entanglement-weighted spacetime grids.

pub mod circuit;
pub mod correlations;
pub mod error;
pub mod ewg;
pub mod exact;
pub mod gates;
pub mod linalg;
pub mod monotones;
pub mod rng;
pub mod sdp;
pub mod statevector;

pub use error::{Error, Result};
pub use statevector::{DensityMatrix, GateMatrix, StateVector};
