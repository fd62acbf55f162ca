use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular linear system for wavenumber {k} (pivot {pivot:e} at row {row})")]
    SingularSystem { k: usize, row: usize, pivot: f64 },

    #[error("linear solve residual {residual:e} exceeds tolerance {tol:e}")]
    LinearResidual { residual: f64, tol: f64 },

    #[error(
        "energy increased after {halvings} step halvings (E_old = {energy_before:.17e}, E_new = {energy_after:.17e})"
    )]
    EnergyIncrease {
        halvings: usize,
        energy_before: f64,
        energy_after: f64,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("stationary solve stalled after {iterations} Newton iterations (residual {residual:e})")]
    Stalled { iterations: usize, residual: f64 },

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config `{key}`: {message}")]
    ConfigSemantic { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("mass mismatch between runs: {0}")]
    MassMismatch(String),

    #[error("decay fit rejected: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
