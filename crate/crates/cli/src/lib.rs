//! File schemas and command implementations behind the `madmm` binary.
//!
//! All machine-readable output is deterministic: identical inputs and seeds
//! produce byte-identical files. Wall-clock timings go to stderr only.

pub mod commands;
pub mod error;
pub mod schema;

pub use error::CliError;

/// Stable exit-code contract.
pub mod exit_code {
    /// Success / all checks passed.
    pub const OK: i32 = 0;
    /// A convergence condition or certificate failed.
    pub const CONDITION_FAIL: i32 = 1;
    /// The solver hit the divergence guard.
    pub const DIVERGENCE: i32 = 2;
    /// I/O or schema error.
    pub const IO_OR_SCHEMA: i32 = 3;
    /// Conditions could not be verified (dimension above the dense cap).
    pub const UNVERIFIED: i32 = 4;
}
