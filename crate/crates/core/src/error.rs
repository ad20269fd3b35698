use thiserror::Error;

/// Errors surfaced by the library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate r_{coordinate} lies outside the {available} coordinates of the atom")]
    CoordinateOutOfRange { coordinate: u32, available: u32 },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("{what} = {value} is out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("depth mismatch: {left} vs {right}")]
    DepthMismatch { left: u32, right: u32 },

    #[error("block has {got} coordinates but the polynomial uses {expected} variables")]
    CardinalityMismatch { expected: usize, got: usize },

    #[error("invalid coordinate block: {0}")]
    InvalidBlock(String),

    #[error("block overlaps coordinates already in use (coordinate r_{0})")]
    OverlappingBlock(u32),

    #[error("spectrum collision at Walsh index {0}")]
    SpectrumCollision(u64),

    #[error("frequency collision at {0}")]
    FrequencyCollision(u64),

    #[error("coordinate budget exceeded: {needed} coordinates needed, limit {limit}")]
    CoordinateBudget { needed: u32, limit: u32 },

    #[error("no admissible level up to {cap}: {reason}")]
    NoAdmissibleLevel { cap: u32, reason: String },

    #[error("{used} coordinates exceed the exhaustive cap {cap}")]
    CapExceeded { used: u32, cap: u32 },

    #[error("psi violates the hypothesis lim psi(x)/x^2 = 0: {0}")]
    PsiHypothesis(String),

    #[error("invalid psi gauge: {0}")]
    InvalidPsi(String),

    #[error("inadmissible multi-index: {0}")]
    InadmissibleMultiIndex(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("library invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
