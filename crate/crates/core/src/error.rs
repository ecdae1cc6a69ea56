use thiserror::Error;

/// Errors raised by the simulation and measurement kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The drawn measurement branch has (numerically) zero probability.
    #[error("degenerate measurement branch on site {site}: probability {probability:e}")]
    DegenerateBranch { site: usize, probability: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    /// A weighted average was requested but every collected weight was zero.
    #[error("no weight collected: weighted average undefined")]
    EmptyWeight,
}

pub type Result<T> = std::result::Result<T, Error>;
