use thiserror::Error;

/// Error type shared by all modules of the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An operation was invoked on a value in the wrong representation
    /// (e.g. a spacetime norm requested without a twisted representation).
    #[error("state error: {0}")]
    State(String),

    /// A quadrature or iteration failed to converge numerically.
    #[error("numeric error: {msg} ({diagnostics})")]
    Numeric { msg: String, diagnostics: String },

    /// A fixed-point iteration diverged; carries the observed ratio history.
    #[error("iteration diverged: {msg}; ratios {ratios:?}")]
    Divergence { msg: String, ratios: Vec<f64> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numeric(msg: impl Into<String>, diagnostics: impl Into<String>) -> Self {
        Error::Numeric {
            msg: msg.into(),
            diagnostics: diagnostics.into(),
        }
    }
}
