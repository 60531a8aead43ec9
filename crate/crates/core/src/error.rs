use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}:{column}: syntax error: {message}")]
    Syntax {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{file}:{line}: {message}")]
    Semantic {
        file: String,
        line: usize,
        message: String,
    },

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("unknown rule id `{0}`")]
    UnknownRule(String),

    #[error("`{0}` is not a tuple of an output relation")]
    UndefinedTuple(String),

    #[error("derivation-tree enumeration exceeded {limit} entries at depth {depth}")]
    ExplosionGuard { limit: usize, depth: usize },

    #[error("candidate generation exceeded the cap of {cap} rules ({reached} reached); lower k or the body length")]
    CapExceeded { cap: usize, reached: usize },

    #[error("malformed CNF: {0}")]
    MalformedCnf(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
