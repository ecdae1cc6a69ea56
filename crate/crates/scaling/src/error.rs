use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: need {needed} usable points, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("crossing not found: {0}")]
    CrossingNotFound(String),

    #[error("extrapolation unavailable: {0}")]
    ExtrapolationUnavailable(String),

    /// The nonlinear fit did not settle; `ssr` is the best residual reached.
    #[error("extrapolation fit did not converge: {reason} (ssr {ssr:e})")]
    ExtrapolationFailed { reason: String, ssr: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
