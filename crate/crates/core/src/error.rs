use thiserror::Error;

use crate::contraction::ContractionError;
use crate::network::NetworkError;

/// Failures of the iterative and reference solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} values, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("bus at position {index} has a zero diagonal coefficient")]
    ZeroDiagonal { index: usize },
    #[error("iteration {iteration}: voltage at bus position {index} collapsed below 1e-6 p.u.")]
    VoltageCollapse { index: usize, iteration: usize },
    #[error("iteration {iteration}: residual {residual:.3e} grew past 1e3 times its initial value {initial:.3e}")]
    Divergence { iteration: usize, residual: f64, initial: f64 },
    #[error("iteration {iteration}: p'Ap = {pap:.3e}, operator is not positive definite")]
    NotPositiveDefinite { iteration: usize, pap: f64 },
    #[error("structurally singular system: {0}")]
    SingularStructure(String),
    #[error("iteration {iteration}: singular Jacobian")]
    SingularJacobian { iteration: usize },
    #[error("no convergence after {iterations} iterations, mismatch {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("non-finite value at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Contraction(#[from] ContractionError),
}
