use thiserror::Error;

use crate::field::Dims;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: Dims, actual: Dims },

    #[error("radius {radius} too large for a {dims} grid (must be below half the smaller side)")]
    RadiusTooLarge { radius: usize, dims: Dims },

    #[error("degenerate kernel: all bump heights are zero, normalization undefined")]
    DegenerateKernel,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid pattern: {0}")]
    Pattern(String),

    #[error("non-finite value at step {step} in {layer} (layer {index}) pixel ({x}, {y})")]
    NonFinite {
        step: u64,
        layer: &'static str,
        index: usize,
        x: usize,
        y: usize,
    },

    #[error(transparent)]
    Snapshot(#[from] crate::engine::snapshot::SnapshotError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
