use thiserror::Error;

/// Errors raised by the exterior-calculus engine and the verification harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("jet order mismatch: {left} vs {right}")]
    OrderMismatch { left: u8, right: u8 },

    #[error("jet order {order} cannot be differentiated")]
    OrderTooLow { order: u8 },

    #[error("singular linear system (pivot magnitude {pivot:.3e})")]
    SingularSystem { pivot: f64 },

    #[error("inconsistent linear system (residual {residual:.3e})")]
    InconsistentSystem { residual: f64 },

    #[error("metric is not positive definite at the base point")]
    NotPositiveDefinite,

    #[error("J^2 + I does not vanish (residual {residual:.3e})")]
    NotAlmostComplex { residual: f64 },

    #[error("form is not of pure bidegree ({p},{q}) (residual {residual:.3e})")]
    NotPureBidegree { p: usize, q: usize, residual: f64 },

    #[error("form is not primitive (|Lambda a| = {residual:.3e})")]
    NotPrimitive { residual: f64 },

    #[error("form is not homogeneous")]
    NotHomogeneous,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("structure generation failed after {attempts} attempts")]
    GenerationFailed { attempts: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
