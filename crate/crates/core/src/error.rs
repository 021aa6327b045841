use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped by the failure class a caller usually needs to act on:
/// configuration and schema problems, data that fails a contract, and
/// numerical failures during estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("feature table rejected ({} violation(s)):\n  {}", .0.len(), .0.join("\n  "))]
    FeatureTable(Vec<String>),

    #[error("rejected mesra: {0}")]
    Reject(String),

    #[error("empty cohort: {0}")]
    EmptyCohort(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("factor `{0}` has a single level; nothing to contrast")]
    SingleLevel(String),

    #[error("rank-deficient design; dependent column(s): {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("alternating demeaning did not converge after {sweeps} sweeps (max group mean {residual:.3e} on `{column}`)")]
    NonConvergence {
        sweeps: usize,
        residual: f64,
        column: String,
    },

    #[error("unknown {kind} `{name}` (available: {})", .available.join(", "))]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: Vec<String>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
