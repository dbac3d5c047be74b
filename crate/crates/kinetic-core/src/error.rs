//! Crate-wide error type.
//!
//! One enum covers the few failure classes the solver distinguishes:
//! mathematical domain violations, out-of-range table queries, invalid
//! runtime state (NaN/negative densities), configuration rejection (which
//! collects *all* violations, not just the first), and I/O.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All error conditions produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition was violated (e.g. negative wavenumber).
    #[error("domain error: {0}")]
    Domain(String),

    /// A query fell outside a tabulated or recorded range.
    #[error("range error: {0}")]
    Range(String),

    /// Runtime state is invalid (NaN or negative density where forbidden).
    #[error("state error: {0}")]
    State(String),

    /// Configuration is invalid; every violation is listed.
    #[error("invalid configuration ({} violation(s)):\n  - {}", .0.len(), .0.join("\n  - "))]
    Config(Vec<String>),

    /// Filesystem failure, annotated with the path involved.
    #[error("i/o failure at {path}: {source}")]
    Io {
        /// Path of the file or directory involved.
        path: String,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },

    /// A data file could not be parsed.
    #[error("malformed data: {0}")]
    Parse(String),
}

impl Error {
    /// Convenience constructor for [`Error::Io`].
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
