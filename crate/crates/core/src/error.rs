//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A prime was rejected: composite, too large, too small for the degree,
    /// or it divides a coefficient denominator it must invert.
    #[error("unusable prime {p}: {reason}")]
    BadPrime { p: u64, reason: String },

    /// Caller-supplied parameters are outside the defined domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two interpolation nodes coincide.
    #[error("interpolation nodes must be pairwise distinct")]
    DuplicateNode,

    /// The evaluation parameter of an interpolation fiber equals a node.
    #[error("evaluation parameter collides with an interpolation node")]
    CollidingC,

    /// An allocation was refused; carries the attempted size.
    #[error("failed to allocate {bytes} bytes")]
    Resource { bytes: u64 },

    /// A checkpoint file failed validation.
    #[error("corrupt checkpoint at byte {offset}: {detail}")]
    CorruptCheckpoint { offset: u64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// An internal invariant that can only fail through a bug was violated.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
