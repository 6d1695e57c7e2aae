use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0} vs {1} points")]
    GridMismatch(usize, usize),

    #[error("non-finite field at step {step} (z = {z:.6}, max|phi| = {max_abs:e})")]
    NonFinite { step: u64, z: f64, max_abs: f64 },

    #[error(
        "self-steepening step too large at z = {z:.6}: s*max|phi|^2*dz/dtau = {courant:.3} exceeds {limit}"
    )]
    SteepeningCfl { z: f64, courant: f64, limit: f64 },

    #[error("ensemble too small: {0} trajectories (need at least 2)")]
    EnsembleTooSmall(usize),

    #[error("mean S3 vanishes; squeezing metric undefined")]
    VanishingS3,

    #[error("trajectory {trajectory} failed: {source}")]
    Trajectory {
        trajectory: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
