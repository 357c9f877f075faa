use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LhkError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dual point has lambda = 0, which carries zero Plancherel mass")]
    ZeroLambda,
    #[error("derivative order {order} exceeds the configured maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("grid does not cover the support: {0}")]
    GridCoverage(String),
    #[error("point outside the domain: {0}")]
    OutsideDomain(String),
    #[error("ill-conditioned system (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("degenerate atom: {0}")]
    Degenerate(String),
    #[error("inadmissible exponents: {0}")]
    Inadmissible(String),
    #[error("no analytic derivative available for {0} and finite differences are disabled")]
    NoDerivative(String),
}

pub type Result<T> = std::result::Result<T, LhkError>;
