//! Vertex-centric power-flow analysis on a property-graph engine.
//!
//! The [`engine`] module is a small bulk-synchronous graph runtime; the rest
//! of the crate expresses network modelling and power-flow iterations as
//! programs on it.

pub mod bipr;
pub mod cases;
pub mod contraction;
pub mod dcg;
pub mod engine;
mod error;
pub mod network;
pub mod pipeline;
mod trace;

pub use num_complex::Complex64;

pub use error::SolveError;
pub use trace::{Convergence, IterationTrace, Stage, TraceRecord};
