//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("argument error: {0}")]
    Argument(String),

    /// An input fails a structural invariant (e.g. a density matrix that is
    /// not Hermitian beyond tolerance).
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A size/enumeration guard was exceeded; `guard` names the limit.
    #[error("resource guard '{guard}' exceeded: {detail}")]
    Resource { guard: String, detail: String },

    /// A numerical routine failed to converge or produced an unusable value.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The decoder SDP hit its iteration cap; carries the best certified
    /// primal/dual pair found.
    #[error("sdp did not converge: best primal {primal}, best dual {dual}")]
    SdpStalled { primal: f64, dual: f64 },

    /// Input file content that parsed as text but is not a valid state/report.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub fn resource(guard: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Resource {
            guard: guard.into(),
            detail: detail.into(),
        }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
