//! Error taxonomy shared across the library.
//!
//! Variants are grouped by who can fix the problem: `Input`, `Config`,
//! `Domain`, and `SingularDesign` indicate bad data or bad settings supplied
//! by the caller; `Oracle` and `Internal` indicate a numerical routine or an
//! internal assumption failed. Front ends map the first group to a usage exit
//! code and the second to an internal-error exit code.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or unreadable input data (files, records, schemas).
    #[error("input error: {0}")]
    Input(String),

    /// Invalid settings: out-of-range thresholds, empty spec lists, bad flags.
    #[error("config error: {0}")]
    Config(String),

    /// Arguments outside a function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Regression design matrix is rank deficient.
    #[error("singular design: collinear columns {columns:?}")]
    SingularDesign { columns: Vec<String> },

    /// A verification oracle could not run (for example a grid too coarse
    /// for the finite-difference solver).
    #[error("oracle error: {0}")]
    Oracle(String),

    /// Invariant violation inside the library; always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True when the error is attributable to caller-supplied data or
    /// settings rather than a defect in the library.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::Config(_) | Error::Domain(_) | Error::SingularDesign { .. }
        )
    }
}
