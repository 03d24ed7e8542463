//! Diagonal-preconditioned conjugate gradient on graph-carried systems, and
//! the fast-decoupled power-flow loop built on it.

mod cg;
mod fast_decoupled;
mod system;

pub use cg::{dcg_solve, DcgConfig, DcgIteration, DcgOutcome, DcgStep, Preconditioner, DEFAULT_INNER_MAX_ITERS};
pub use fast_decoupled::{fast_decoupled_solve, inner_tolerance, FdConfig, FdResult, DEFAULT_MAX_OUTER, DEFAULT_TOL_PQ};
pub use system::GraphSystem;
