use thiserror::Error;

use crate::limits::TheoremBranch;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    /// A least-squares denominator vanished. Expected for zero-noise paths
    /// and possible under Rademacher noise; Monte Carlo batches record and
    /// skip these.
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("roots too close for the distinct-roots closed form: |theta - rho| = {gap:e}")]
    DegenerateRoots { gap: f64 },

    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("branch {branch} does not apply: {reason}")]
    BranchMismatch {
        branch: TheoremBranch,
        reason: String,
    },

    #[error("{count} non-finite samples")]
    NonFinite { count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown property suite `{0}`")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
