use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    /// Unconverged SDP solves exceeded the allowed fraction.
    #[error("numerical failure budget exceeded: {unconverged} of {total} SDP solves unconverged")]
    NumericalBudget { unconverged: u64, total: u64 },

    #[error(transparent)]
    Core(#[from] mipt_core::Error),

    #[error(transparent)]
    Scaling(#[from] mipt_scaling::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn format(path: impl AsRef<std::path::Path>, reason: impl Into<String>) -> Self {
        Error::Format { path: path.as_ref().display().to_string(), reason: reason.into() }
    }

    /// Process exit code: 2 configuration, 3 I/O, 4 numerical failure budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Core(mipt_core::Error::Config(_)) | Error::Core(mipt_core::Error::Capacity(_)) => 2,
            Error::Scaling(_) => 2,
            Error::Io { .. } | Error::Format { .. } => 3,
            Error::NumericalBudget { .. } | Error::Core(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
