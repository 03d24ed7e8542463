//! Electrical network model: case parsing, per-unit data, admittance and
//! fast-decoupled coefficient graphs, and power mismatches.

mod case;
mod decoupled;
pub mod dense;
mod matpower;
mod mismatch;
pub mod scenario;
mod state;
mod ybus;

use thiserror::Error;

use crate::engine::EngineError;

pub use case::{Branch, Bus, BusKind, NetworkCase};
pub use decoupled::{build_decoupled, build_decoupled_with, Coefficients, DecoupledGraph};
pub use matpower::{parse_case, write_case};
pub use mismatch::{compute_mismatch, compute_mismatch_with, MismatchResult};
pub use state::VoltageState;
pub use ybus::{build_ybus, build_ybus_with, AdmittanceGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: reference to unknown bus {bus}")]
    UnknownBus { bus: i64, line: usize },
    #[error("case has no slack bus")]
    NoSlack,
    #[error("case has several slack buses: {buses:?}")]
    MultipleSlack { buses: Vec<u32> },
    #[error("bus {bus} has no in-service branch")]
    IsolatedBus { bus: u32 },
    #[error("bus {bus} is not connected to the slack bus")]
    Disconnected { bus: u32 },
    #[error("branch {branch}: {reason}")]
    InvalidBranch { branch: usize, reason: String },
    #[error("bus {bus}: {reason}")]
    InvalidBus { bus: u32, reason: String },
    #[error("branch {branch} ({from}-{to}) has zero series impedance; contract it first")]
    ZeroImpedance { branch: usize, from: u32, to: u32 },
    #[error("branch {branch} ({from}-{to}) has zero reactance; B' is undefined")]
    ZeroReactance { branch: usize, from: u32, to: u32 },
    #[error("state has {found} entries, network has {expected} buses")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}
