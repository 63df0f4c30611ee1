use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// A construction would exceed a size guard (exponential blowup, enumeration limit).
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    /// Third weight vector is not a linear combination of the first two.
    #[error("weights are not coplanar (least-squares residual {residual:e})")]
    NotCoplanar { residual: f64 },

    /// Third bias is the same linear combination as its weights.
    #[error("bias also dependent (|d3 - p d1 - q d2| = {gap:e})")]
    BiasDependent { gap: f64 },

    #[error("column count {0} is not a power of two")]
    NotPowerOfTwo(usize),

    /// `column` is zero-based; the message reports it one-based.
    #[error("not factorable: column {} deviates by {deviation:e}", column + 1)]
    NotFactorable { column: usize, deviation: f64 },

    #[error("linear program solver: {0}")]
    Solver(String),

    #[error("training diverged for every learning rate in the grid")]
    AllDiverged,

    #[error("retry budget of {0} exhausted")]
    RetryBudget(usize),

    #[error("margin audit: example {0} has zero infinity norm")]
    ZeroNorm(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
