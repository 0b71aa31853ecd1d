use std::fmt;
use std::path::PathBuf;

use crate::exit_code;

/// Command-level errors mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, detail: String },
    Schema { path: PathBuf, detail: String },
    /// Invalid spec/config contents (not JSON shape): named field + reason.
    Input(String),
    Conditions { clause: String },
    Diverged { iteration: usize },
    Unverified(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Schema { .. } | CliError::Input(_) => {
                exit_code::IO_OR_SCHEMA
            }
            CliError::Conditions { .. } => exit_code::CONDITION_FAIL,
            CliError::Diverged { .. } => exit_code::DIVERGENCE,
            CliError::Unverified(_) => exit_code::UNVERIFIED,
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            detail: err.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, detail } => write!(f, "{}: {detail}", path.display()),
            CliError::Schema { path, detail } => {
                write!(f, "{}: schema violation at {detail}", path.display())
            }
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Conditions { clause } => {
                write!(f, "convergence conditions failed ({clause}); pass --force to run anyway")
            }
            CliError::Diverged { iteration } => {
                write!(f, "solver diverged at iteration {iteration}")
            }
            CliError::Unverified(msg) => write!(f, "conditions unverified: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<madmm::Error> for CliError {
    fn from(e: madmm::Error) -> Self {
        match e {
            madmm::Error::ConditionsFailed { clause } => CliError::Conditions { clause },
            madmm::Error::Diverged { iteration, .. } => CliError::Diverged { iteration },
            madmm::Error::DenseCapExceeded { dim, cap } => {
                CliError::Unverified(format!("dimension {dim} exceeds the dense cap {cap}"))
            }
            other => CliError::Input(other.to_string()),
        }
    }
}
