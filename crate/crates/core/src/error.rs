use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u128),

    #[error("modulus {0} out of range (must satisfy 2 < p < 2^127)")]
    ModulusOutOfRange(u128),

    #[error("value {value} exceeds fixed-point headroom (|x|*2^{scale_exponent} must stay below {limit})")]
    Overflow {
        value: f64,
        scale_exponent: u32,
        limit: u128,
    },

    #[error("invalid sharing parameters: {0}")]
    InvalidParams(String),

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("insufficient shares: got {got}, need {need}")]
    InsufficientShares { got: usize, need: usize },

    #[error("duplicate evaluation point {0}")]
    DuplicateEvalPoint(u64),

    #[error("evaluation point 0 would expose the secret")]
    ZeroEvalPoint,

    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),

    #[error("fixed-point scale mismatch: 2^{0} vs 2^{1}")]
    ScaleMismatch(u32, u32),

    #[error("share layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear system is singular or not positive definite")]
    SingularSystem,

    #[error("did not converge within {max_iter} iterations")]
    NotConverged { max_iter: usize },

    #[error("missing submission from institution {institution} at iteration {iteration}")]
    MissingSubmission { institution: usize, iteration: usize },

    #[error("iteration mismatch: expected {expected}, got {got}")]
    IterationMismatch { expected: usize, got: usize },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("response value {value:?} at row {row} is not binary")]
    NonBinaryResponse { row: usize, value: String },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("cannot split {rows} rows into {parts} partitions")]
    TooManyPartitions { rows: usize, parts: usize },

    #[error("federated and centralized fits differ by {max_abs_diff:e} (threshold {threshold:e})")]
    ParityFailed { max_abs_diff: f64, threshold: f64 },

    #[error("rerun of {path} does not reproduce the recorded output")]
    NotReproduced { path: String },

    #[error("malformed message: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }

    /// Strips iteration context, returning the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
