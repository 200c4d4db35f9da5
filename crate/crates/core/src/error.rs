use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the algebraic and geometric operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input falls outside the operation's domain (shapes, ranges, hypotheses).
    #[error("domain error: {0}")]
    Domain(String),

    /// Points lying on (or numerically near) the center of a projection.
    #[error("{} point(s) lie on the projection center (first: {:?})", .indices.len(), .indices.first())]
    CenterIncidence { indices: Vec<usize> },

    /// A value fails a structural invariant; `atom` names the offending atom when known.
    #[error("validation error{}: {message}", match .atom { Some(i) => alloc::format!(" at atom {i}"), None => String::new() })]
    Validation { atom: Option<usize>, message: String },

    /// Bounded resampling did not produce an admissible configuration.
    #[error("retries exhausted after {attempts} attempts: {reason}")]
    RetriesExhausted { attempts: usize, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
