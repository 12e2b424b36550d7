use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range for {len} agents")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("unsupported graph: {0}")]
    UnsupportedGraph(String),

    #[error("no connected graph found after {attempts} attempts")]
    NotConnected { attempts: usize },

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("fixed-point iteration did not converge in {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("too few samples: need at least {needed}, have {available}")]
    TooFewSamples { needed: usize, available: usize },

    #[error("conditioning event not observed after {attempts} attempts")]
    RetryBudgetExhausted { attempts: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("trial {trial} (seed {seed:#018x}) failed at stage `{stage}`: {source}")]
    Trial {
        trial: usize,
        seed: u64,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures that originate in the numerics rather than in
    /// user-supplied configuration.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular(_)
            | Error::NoConvergence { .. }
            | Error::NotConnected { .. }
            | Error::RetryBudgetExhausted { .. }
            | Error::TooFewSamples { .. } => true,
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
