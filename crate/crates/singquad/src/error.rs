//! Error type shared by all modules.

use thiserror::Error;

/// Errors reported by the quadrature library.
///
/// Numeric payloads are stored as `f64` regardless of the scalar type the
/// computation ran with.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("integrand evaluated to a non-finite value at node {node:?}")]
    EvaluationFailure { node: Vec<f64> },

    #[error("radial moment with exponent {exponent} is not integrable (needs exponent > -1)")]
    NonIntegrableMoment { exponent: f64 },

    #[error(
        "stencil is degenerate: moment-matching matrix condition number {condition:.3e} exceeds {limit:.1e}"
    )]
    StencilDegenerate { condition: f64, limit: f64 },

    #[error("did not converge: {context} (best {best:.17e}, remaining gap {gap:.3e})")]
    NoConvergence {
        context: String,
        best: f64,
        gap: f64,
    },

    #[error("weights incompatible with the requested rule: {0}")]
    IncompatibleWeights(String),

    #[error("kernel radial expansion has {have} terms but the rule needs {need}")]
    InsufficientExpansion { have: usize, need: usize },

    #[error("offset {alpha:?} lies outside [-1/2, 1/2]^n")]
    OutOfRange { alpha: Vec<f64> },

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed weight file: {0}")]
    MalformedFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
