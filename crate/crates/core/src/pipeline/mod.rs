//! End-to-end solves: contraction, warm start and fast-decoupled finish, plus
//! the Newton-Raphson reference and method comparison.

mod compare;
mod hybrid;
mod newton;
mod report;

pub use compare::{compare_methods, CompareConfig, ComparisonRow, ComparisonTable};
pub use hybrid::{hybrid_solve, nr_report, solve_method, HybridConfig, Method, PipelineError, ProfileOverrides,
    DEFAULT_SWITCH_TOL};
pub use newton::{newton_raphson_from, newton_raphson_reference, NewtonResult, DEFAULT_NR_MAX_ITERS, DEFAULT_NR_TOL};
pub use report::{ContractionSummary, SolveReport, StageTiming};
