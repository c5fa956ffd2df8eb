use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("edge {{{0}, {1}}} is not in the graph")]
    MissingEdge(usize, usize),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("adversary action {action} is not monotone: {reason}")]
    Monotonicity { action: usize, reason: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("oracle failed at iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("oracle could not certify or separate: {0}")]
    OracleDiagnostic(String),
    #[error("{what} = {got} exceeds the limit {limit}")]
    TooLarge {
        what: &'static str,
        got: usize,
        limit: usize,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
