use thiserror::Error;

/// Crate-wide error type. `code()` yields a stable machine-parseable
/// identifier used by the CLI (`error[<code>]: ...`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("map (branch {branch}, i = {index}) has |ratio| = {ratio} >= 1, not a contraction")]
    NotContractive { branch: usize, index: u32, ratio: f64 },

    #[error("map (branch {branch}, i = {index}) has |ratio| = {ratio} above declared sup ratio {declared}")]
    DeclaredRatioExceeded { branch: usize, index: u32, ratio: f64, declared: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires dimension 1, family has dimension {got}")]
    NotOneDimensional { got: usize },

    #[error("{0}")]
    Parse(#[from] crate::expr::ParseError),

    #[error("division by zero evaluating coefficient at i = {index}")]
    DivisionByZero { index: u32 },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("unknown builtin family '{0}' (expected EX1, EX2, DYADIC or GEO(q))")]
    UnknownFamily(String),

    #[error("composition word must be nonempty with 1-based letters; {0}")]
    InvalidWord(String),

    #[error("enumeration of {words} composition words exceeds budget {budget}; lower N or k, or raise the budget")]
    BudgetExceeded { words: u128, budget: u64 },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("point cloud contains a non-finite coordinate")]
    NonFinitePoint,

    #[error("empirical sup ratio {sup} is too close to 1 for set iteration (needs < 1 - 1e-9)")]
    SupRatioTooLarge { sup: f64 },

    #[error("declared sup ratio {declared} is not contractive; pass --force-truncate to run on the truncated family")]
    DeclaredRatioNotContractive { declared: f64 },

    #[error("map (branch {branch}, i = {index}) has negative ratio {ratio}; interval check needs non-decreasing maps")]
    NegativeRatio { branch: usize, index: u32, ratio: f64 },

    #[error("invalid probability sequence: {0}")]
    InvalidProbabilities(String),

    #[error("residual in dimension >= 2 needs a histogram; set a cell size first")]
    HistogramRequired,

    #[error("unknown claim '{name}'; valid claims: {valid}")]
    UnknownClaim { name: String, valid: String },

    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable identifier for scripting against CLI failures.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotContractive { .. } => "not-contractive",
            Error::DeclaredRatioExceeded { .. } => "declared-ratio-exceeded",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NotOneDimensional { .. } => "not-one-dimensional",
            Error::Parse(_) => "parse-error",
            Error::DivisionByZero { .. } => "division-by-zero",
            Error::InvalidFamily(_) => "invalid-family",
            Error::UnknownFamily(_) => "unknown-family",
            Error::InvalidWord(_) => "invalid-word",
            Error::BudgetExceeded { .. } => "budget-exceeded",
            Error::EmptyCloud => "empty-cloud",
            Error::NonFinitePoint => "non-finite-point",
            Error::SupRatioTooLarge { .. } => "sup-ratio-too-large",
            Error::DeclaredRatioNotContractive { .. } => "declared-ratio-not-contractive",
            Error::NegativeRatio { .. } => "negative-ratio",
            Error::InvalidProbabilities(_) => "invalid-probabilities",
            Error::HistogramRequired => "histogram-required",
            Error::UnknownClaim { .. } => "unknown-claim",
            Error::Unsupported(_) => "unsupported",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
