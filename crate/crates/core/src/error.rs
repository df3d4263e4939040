use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("quadrature did not converge (estimate {estimate:e}, error bound {error:e})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("invalid phase scheme: {0}")]
    Scheme(String),
    #[error("no feasible starting point: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
