use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("spectrum is not Hermitian-symmetric (max deviation {deviation:e} at ({row}, {col}))")]
    NotHermitian { deviation: f64, row: usize, col: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("infeasible transport problem: source mass {source_mass} vs target mass {target_mass}")]
    Infeasible { source_mass: f64, target_mass: f64 },

    #[error("instance too large for exhaustive enumeration: {n_source} + {n_target} atoms (limit {limit})")]
    TooLarge { n_source: usize, n_target: usize, limit: usize },

    #[error("sinkhorn did not converge in {iterations} iterations (marginal violation {violation:e})")]
    NotConverged { iterations: usize, violation: f64 },

    #[error("training diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("{path}: byte {offset}: {reason}")]
    Format { path: PathBuf, offset: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
