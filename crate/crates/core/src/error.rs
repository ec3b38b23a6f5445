use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} is closer than {margin:e} to the domain boundary")]
    BoundaryMargin { point: Vec<f64>, margin: f64 },

    #[error("non-finite evaluation at {0:?}")]
    NonFinite(Vec<f64>),

    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
