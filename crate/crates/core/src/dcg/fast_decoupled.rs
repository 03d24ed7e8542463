use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{Engine, ExecMode};
use crate::error::SolveError;
use crate::network::{compute_mismatch_with, AdmittanceGraph, BusKind, Coefficients, DecoupledGraph};
use crate::trace::{Convergence, IterationTrace, Stage, TraceRecord};

use super::cg::{dcg_solve, DcgConfig};
use super::system::GraphSystem;

pub const DEFAULT_TOL_PQ: f64 = 5e-2;
pub const DEFAULT_MAX_OUTER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub tol_p: f64,
    pub tol_q: f64,
    pub max_outer: usize,
    pub inner: DcgConfig,
}

impl FdConfig {
    /// Outer tolerances with the inner tolerance tied to them:
    /// `min(1e-8, 0.01·min(tol_p, tol_q))`.
    pub fn with_tolerances(tol_p: f64, tol_q: f64) -> Self {
        Self {
            tol_p,
            tol_q,
            max_outer: DEFAULT_MAX_OUTER,
            inner: DcgConfig {
                tol: inner_tolerance(tol_p, tol_q),
                ..DcgConfig::default()
            },
        }
    }

    pub fn with_exec(mut self, exec: ExecMode) -> Self {
        self.inner.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol_p > 0.0 && self.tol_q > 0.0) {
            return Err(SolveError::InvalidConfig("mismatch tolerances must be positive".into()));
        }
        if !(self.inner.tol > 0.0) {
            return Err(SolveError::InvalidConfig("inner tolerance must be positive".into()));
        }
        Ok(())
    }
}

impl Default for FdConfig {
    fn default() -> Self {
        Self::with_tolerances(DEFAULT_TOL_PQ, DEFAULT_TOL_PQ)
    }
}

pub fn inner_tolerance(tol_p: f64, tol_q: f64) -> f64 {
    DEFAULT_INNER_TOL_CAP.min(0.01 * tol_p.min(tol_q))
}

const DEFAULT_INNER_TOL_CAP: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct FdResult {
    pub state: Vec<Complex64>,
    pub trace: IterationTrace,
    pub termination: Convergence,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub budget_exhausted_inner_solves: usize,
}

/// Successive fast-decoupled iteration: a `B′` angle solve, a mismatch
/// refresh, then a `B″` magnitude solve, each by DCG from a zero correction.
pub fn fast_decoupled_solve(
    ybus: &AdmittanceGraph,
    decoupled: &DecoupledGraph,
    state0: &[Complex64],
    config: &FdConfig,
) -> Result<FdResult, SolveError> {
    config.validate()?;
    let n = ybus.bus_count();
    if state0.len() != n {
        return Err(SolveError::Dimension {
            expected: n,
            found: state0.len(),
        });
    }
    if decoupled.graph().vertex_count() != n {
        return Err(SolveError::Dimension {
            expected: n,
            found: decoupled.graph().vertex_count(),
        });
    }
    let engine = Engine::new(config.inner.exec);
    let started = Instant::now();
    let mut vm: Vec<f64> = state0.iter().map(|v| v.norm()).collect();
    let mut va: Vec<f64> = state0.iter().map(|v| v.arg()).collect();
    let mut state = state0.to_vec();
    let mut trace = IterationTrace::default();
    let mut inner_total = 0;
    let mut exhausted = 0;
    let zeros = vec![0.0; n];

    let mut mis = compute_mismatch_with(&engine, ybus, &state)?;
    for k in 0..=config.max_outer {
        if mis.max_dp < config.tol_p && mis.max_dq < config.tol_q {
            return Ok(FdResult {
                state,
                trace,
                termination: Convergence::Converged,
                outer_iterations: k,
                inner_iterations: inner_total,
                budget_exhausted_inner_solves: exhausted,
            });
        }
        if k == config.max_outer {
            break;
        }
        let before = state.clone();

        let rhs: Vec<f64> = mis.dp.iter().zip(&vm).map(|(dp, m)| dp / m).collect();
        let system = GraphSystem::from_decoupled(decoupled, Coefficients::BPrime, rhs)?;
        let mut last_residual = 0.0;
        if system.dimension() > 0 {
            let out = dcg_solve(&system, &zeros, &config.inner)?;
            inner_total += out.iterations;
            exhausted += usize::from(!out.termination.converged());
            last_residual = out.residual;
            for (v, dtheta) in out.x.iter().enumerate() {
                if system.in_set(v) {
                    va[v] += dtheta;
                }
            }
            state = polar(&vm, &va);
        }

        mis = compute_mismatch_with(&engine, ybus, &state)?;
        let rhs: Vec<f64> = mis.dq.iter().zip(&vm).map(|(dq, m)| dq / m).collect();
        let system = GraphSystem::from_decoupled(decoupled, Coefficients::BDoublePrime, rhs)?;
        if system.dimension() > 0 {
            let out = dcg_solve(&system, &zeros, &config.inner)?;
            inner_total += out.iterations;
            exhausted += usize::from(!out.termination.converged());
            last_residual = out.residual;
            for (v, dvm) in out.x.iter().enumerate() {
                if system.in_set(v) && ybus.kinds()[v] == BusKind::Pq {
                    vm[v] += dvm;
                }
            }
            state = polar(&vm, &va);
        }

        mis = compute_mismatch_with(&engine, ybus, &state)?;
        if !mis.mbpim.is_finite() {
            return Err(SolveError::NonFinite { iteration: k + 1 });
        }
        let (d_vr, d_va) = before.iter().zip(&state).fold((0.0f64, 0.0f64), |(r, i), (a, b)| {
            let d = b - a;
            (r.max(d.re.abs()), i.max(d.im.abs()))
        });
        trace.push(TraceRecord {
            iteration: k + 1,
            stage: Stage::Dcg,
            d_vr,
            d_va,
            d_p: mis.max_dp,
            d_q: mis.max_dq,
            mbpim: mis.mbpim,
            millis: started.elapsed().as_secs_f64() * 1e3,
            inner_iterations: Some(inner_total),
            inner_residual: Some(last_residual),
        });
    }
    Ok(FdResult {
        state,
        trace,
        termination: Convergence::BudgetExhausted,
        outer_iterations: config.max_outer,
        inner_iterations: inner_total,
        budget_exhausted_inner_solves: exhausted,
    })
}

fn polar(vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
}
