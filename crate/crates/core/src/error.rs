use thiserror::Error;

use crate::recurrence::Violation;

#[derive(Clone, Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate recurrence: {0}")]
    Degenerate(#[from] Violation),

    #[error("gamma appears rational; check multiplicative independence of p and alpha")]
    RationalGamma,

    #[error("reduction inconclusive; raise precision or attempt limit ({0})")]
    ReductionInconclusive(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal arithmetic error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
