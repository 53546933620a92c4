//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A probability vector failed validation (negative entry, empty
    /// support, or mass too far from 1 to renormalize).
    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    /// An argument was outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two inputs that must agree in shape did not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Exact enumeration was requested for a strategy support larger than
    /// the configured cap.
    #[error("enumeration cap exceeded: {states} strategy states > {cap}")]
    EnumerationCap { states: usize, cap: usize },

    /// The download budget admits no feasible strategy.
    #[error("infeasible download budget: D = {budget} < n - 1 = {min}")]
    Infeasible { budget: f64, min: f64 },

    /// A retrieval round produced an inconsistent transcript.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A wire message failed to encode or decode.
    #[error("wire format error: {0}")]
    Wire(String),
}

pub type Result<T> = std::result::Result<T, Error>;
