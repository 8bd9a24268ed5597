use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("field `{field}` has {got} entries, expected {expected}")]
    ShapeMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("bilinear form is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("algebra has zero multiplication; no nonzero idempotent exists")]
    ZeroAlgebra,

    #[error("idempotent search exhausted after {starts} starts without finding a nonzero idempotent")]
    SearchExhausted { starts: usize },

    #[error("Newton refinement diverged (residual {residual:.3e} after {iterations} iterations)")]
    NewtonDivergence { residual: f64, iterations: usize },

    #[error("subspace is a zero subalgebra (all products vanish)")]
    ZeroSubalgebra,

    #[error("algebra is not unital")]
    NonUnital,

    #[error("no nontrivial idempotent (distinct from the unit) was found")]
    NoNontrivialIdempotent,

    #[error("algebra is not minimal (normalized gap {gap:.3e}); operation requires a minimal algebra")]
    NotMinimal { gap: f64 },

    #[error("element is not an extremal idempotent of the normalized algebra: {0}")]
    NotExtremal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
