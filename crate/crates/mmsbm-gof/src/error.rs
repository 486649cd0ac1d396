use thiserror::Error;

/// Errors produced by parsing, validation, and the capacity guards of the
/// exact-enumeration oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input at line {line}: {msg}")]
    MalformedInput { line: usize, msg: String },
    #[error("self-loop at line {line}: node {node} may not point to itself")]
    SelfLoop { line: usize, node: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("value error: {0}")]
    Value(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("capacity guard exceeded: {0}")]
    Capacity(String),
    #[error("data integrity: {0}")]
    DataIntegrity(String),
    #[error("realization {index}: {source}")]
    AtRealization {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tag an error with the posterior-realization index it occurred in.
    pub fn at_realization(self, index: usize) -> Error {
        Error::AtRealization {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
