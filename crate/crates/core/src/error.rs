use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("offset x{index} = {value} mm is outside [-{limit}, {limit}] mm")]
    OffsetOutOfRange {
        index: usize,
        value: f64,
        limit: f64,
    },

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("edge {a}-{b} has non-positive resistance {ohms} ohm")]
    NonPositiveResistance { a: usize, b: usize, ohms: f64 },

    #[error("nodal solve residual {residual:e} A exceeds tolerance")]
    SolveResidual { residual: f64 },

    #[error("matrix is not positive definite (jitter escalated to {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid kernel parameters: {0}")]
    InvalidParams(String),

    #[error("negative distance {0}")]
    NegativeDistance(f64),

    #[error("reward {0} is outside [0, 1]")]
    RewardOutOfRange(f64),

    #[error("arm {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error(
        "initial voltages have zero spread (all {value} V); re-draw the initialization points"
    )]
    DegenerateNormalizer { value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("objective failed at iteration {iteration}: {source}")]
    Objective {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: malformed record: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    /// True for failures of the numerical machinery (solver residuals,
    /// factorization breakdown) as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SolveResidual { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NonPositiveResistance { .. } => true,
            Error::Objective { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
