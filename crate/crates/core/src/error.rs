use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("dense materialization refused: dimension {dim} exceeds cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid instance spec: field `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("subproblem backend misconfigured: {0}")]
    BackendConfig(String),

    #[error("convergence conditions failed ({clause}); set `force` to run anyway")]
    ConditionsFailed { clause: String },

    #[error("solver diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("iterates are not consecutive: prev k = {prev}, curr k = {curr}")]
    NonConsecutiveIterates { prev: usize, curr: usize },

    #[error("{quantity} requires a reference solution")]
    MissingReference { quantity: &'static str },

    #[error("all {attempts} probes fell outside dom(p) x dom(q); supply a domain-aware sampler")]
    AllProbesInfeasible { attempts: usize },

    #[error("complexity constants undefined: {0}")]
    ConstantsUndefined(String),

    #[error("run history is missing {0}")]
    HistoryIncomplete(&'static str),

    #[error("operation inapplicable: {0}")]
    Inapplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
