use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing parameter `{0}`")]
    MissingParam(String),

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("{name} {reason} (got {value})")]
    InvalidParam {
        name: String,
        value: f64,
        reason: &'static str,
    },

    #[error("mesh needs at least one element")]
    EmptyMesh,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix numerically singular (zero pivot at row {row})")]
    Singular { row: usize },

    #[error("CFL violation: dt = {dt:e} exceeds the admissible bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("instability detected at step {step} (t = {t:e}): {reason}")]
    Instability { step: usize, t: f64, reason: String },

    #[error("meshes are not nested: {0}")]
    NonNestedMeshes(String),

    #[error("records share no snapshot times")]
    NoCommonSnapshots,

    #[error("invalid rate-fit input: {0}")]
    RateFit(String),

    #[error("invalid configuration at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("failed to parse config: {0}")]
    ConfigParse(String),

    #[error("empty plot series")]
    EmptySeries,

    #[error("record holds no snapshots or monitors")]
    EmptyRecord,

    #[error("malformed CSV {path}: {reason}")]
    Csv { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::Instability { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
