//! Crate-wide error type.
//!
//! Recoverable failures fall into three buckets: window/truncation
//! exhaustion (the requested coefficient or rewrite lies outside what the
//! configured windows can certify), genuine mathematical failure of a
//! checked identity, and malformed configuration. Structural misuse
//! (mismatched variable orders, incompatible tensor shapes) panics instead:
//! those are programming errors, not runtime conditions.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A coefficient outside every guaranteed window was requested.
    #[error("unknown coefficient: {context} needs {var}^{exponent}, window covers {lo}..{hi}")]
    UnknownCoefficient {
        context: String,
        var: String,
        exponent: i64,
        lo: i64,
        hi: i64,
    },

    /// An operation would need data beyond the truncation order.
    #[error("window underflow in {context}: {detail}")]
    WindowUnderflow { context: String, detail: String },

    /// Series inversion met a non-invertible leading term.
    #[error("cannot invert series: {0}")]
    SingularSeries(String),

    /// Evaluation of a rational function at a pole.
    #[error("pole at {0}")]
    PoleEvaluation(String),

    /// A rewrite exceeded its tracked filtration window.
    #[error("filtration window exhausted in {context}: {detail}")]
    FiltrationExhausted { context: String, detail: String },

    /// A runtime cancellation assertion failed (e.g. a negative power
    /// survived where the computation requires it to cancel).
    #[error("cancellation failure in {context}: {detail}")]
    CancellationFailure { context: String, detail: String },

    /// Bad user-supplied configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
