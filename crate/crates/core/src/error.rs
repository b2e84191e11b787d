use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("optical thickness must be positive and finite, got {0}")]
    Thickness(f64),
    #[error("saturation parameter must be non-negative and finite, got {0}")]
    Saturation(f64),
    #[error("k*l must exceed 1, got {0}")]
    Klf(f64),
    #[error("detuning must be finite, got {0}")]
    Detuning(f64),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("iteration diverged at step {iteration} (residual {residual:e})")]
    Diverged { iteration: usize, residual: f64 },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("singular linear system")]
    Singular,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
