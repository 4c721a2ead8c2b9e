use thiserror::Error;

/// Errors raised by the measure, envelope, cascade, primal and optimizer layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid function: {0}")]
    InvalidGrid(String),

    /// Envelope evaluated outside its hull by more than the clamp tolerance.
    /// On validated instances this cannot happen; it signals non-nested supports.
    #[error("point {t} outside envelope domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("size cap exceeded: {what} is {actual}, cap {cap}")]
    SizeCap {
        what: &'static str,
        actual: usize,
        cap: usize,
    },

    #[error("marginals are not in convex order: {0}")]
    NotInConvexOrder(String),

    #[error("coupling invalid: {0}")]
    InvalidCoupling(String),

    #[error("semi-static inequality violated by {excess:e} at path {path:?}")]
    HedgeViolation { path: Vec<usize>, excess: f64 },

    #[error("linear program infeasible")]
    Infeasible,

    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, MotError>;
