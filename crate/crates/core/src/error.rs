//! Error type shared across the crate.
//!
//! Three failure families matter to callers: bad configuration (rejected before
//! any numerics run), a numerical integration that lost validity mid-run, and
//! I/O. The CLI maps them to distinct exit codes; the C ABI maps them to status
//! codes.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or config-file value. `key` names the offending field
    /// the way a config file would spell it.
    #[error("config error: {key}: {message}")]
    Config { key: String, message: String },

    /// Input outside the domain of an operation (time outside the protocol
    /// window, dimension mismatch, non-state density matrix, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The integrator detected an invalid state (trace drift, negative
    /// eigenvalue) or could not meet the error tolerance within the allowed
    /// number of step halvings. Carries the time at which it gave up.
    #[error("integration failure at t = {t}: {message}")]
    Integration { t: f64, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { key: key.into(), message: message.into() }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    pub fn integration(t: f64, message: impl Into<String>) -> Self {
        Error::Integration { t, message: message.into() }
    }

    /// Process exit code for the CLI: 1 for anything wrong with inputs or the
    /// environment, 2 for a run that started and then failed numerically.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Integration { .. } => 2,
            _ => 1,
        }
    }
}
