use thiserror::Error;

/// Errors raised by the toolkit. Every variant names the offending input so
/// batch runs can point at the config key or the replica/step at fault.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A malformed specification or plan.
    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    /// A value outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested operation has no implementation for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A non-finite value appeared during simulation.
    #[error("numerical failure in replica {replica} at step {step}: {message}")]
    Numerical {
        replica: u64,
        step: u64,
        message: String,
    },

    /// Reading or writing an output failed.
    #[error("i/o error: {0}")]
    Io(String),

    /// An identity that must hold exactly was violated.
    #[error("assertion violated: {0}")]
    Assertion(String),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
