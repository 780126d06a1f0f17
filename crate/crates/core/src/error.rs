use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index out of range: {what} {index} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("non-finite update target {0}")]
    NonFiniteTarget(f64),

    #[error("episode already terminated; call reset before stepping")]
    EpisodeTerminated,

    #[error("value iteration did not converge within {iterations} sweeps (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },

    #[error("estimates diverged at update {update}: |Q| = {magnitude:e} exceeds bound {bound:e}")]
    Diverged {
        update: usize,
        magnitude: f64,
        bound: f64,
    },

    #[error("improper policy: states {0:?} can avoid the absorbing set forever")]
    ImproperPolicy(Vec<usize>),

    #[error("malformed MDP spec: {0}")]
    MdpSpec(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
