use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    Range { vertex: usize, n: usize },

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),

    #[error("edge ({0}, {1}) is not in the graph")]
    UnknownEdge(usize, usize),

    #[error("automorphism search exceeded its budget of {0} tree nodes")]
    SearchBudgetExceeded(u64),

    #[error("size limit: {0}")]
    SizeLimit(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mapping is not a bijection on the bitstrings")]
    NotBijection,

    #[error("cost is not constant on orbit with representative {0:#b}")]
    NotInvariant(usize),

    #[error("graph has too few edges: need {needed}, have {have}")]
    EmptyGraph { needed: usize, have: usize },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("need at least {needed} cutoff classifiers, have {have}")]
    TooFewCutoffs { needed: usize, have: usize },

    #[error("input is constant; correlation is undefined")]
    ConstantInput,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SizeLimit(_) | Error::SearchBudgetExceeded(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
