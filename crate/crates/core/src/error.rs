use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is invalid. `key` names the offending field
    /// using the config-file path (e.g. `engine.window.w_min`).
    #[error("invalid configuration `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("shape mismatch for {what}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("motion tangent has zero norm; use the stabilized projection")]
    DegenerateTangent,

    #[error("non-finite component at index {index}")]
    NonFinite { index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("frame {frame} is outside the schedule (total_frames = {total})")]
    FrameOutOfRange { frame: usize, total: usize },

    #[error("anchor for segment {got} pushed after segment {last}")]
    NonMonotoneSegment { last: usize, got: usize },

    #[error("rollout already finished after {blocks} blocks")]
    RolloutFinished { blocks: usize },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("serialization: {0}")]
    Serialize(String),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable code, used by the CLI and the bindings.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::DegenerateTangent => "degenerate_tangent",
            Error::NonFinite { .. } => "non_finite",
            Error::Empty(_) => "empty",
            Error::FrameOutOfRange { .. } => "frame_out_of_range",
            Error::NonMonotoneSegment { .. } => "non_monotone_segment",
            Error::RolloutFinished { .. } => "rollout_finished",
            Error::Io(_) => "io",
            Error::Serialize(_) => "serialize",
        }
    }

    /// Offending field, when one can be named.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Config { key, .. } => Some(key),
            _ => None,
        }
    }
}
