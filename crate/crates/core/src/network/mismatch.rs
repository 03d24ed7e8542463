use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{Engine, Incidence, Max, PropertyGraph, Sum, SuperstepProgram, VertexId};

use super::case::BusKind;
use super::ybus::AdmittanceGraph;
use super::NetworkError;

/// Power-balance residuals. `dp` is zero on the slack bus and `dq` is zero
/// on PV and slack buses; both are indexed like the case buses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MismatchResult {
    pub dp: Vec<f64>,
    pub dq: Vec<f64>,
    pub max_dp: f64,
    pub max_dq: f64,
    /// Maximum bus power injection mismatch, per-unit.
    pub mbpim: f64,
}

struct MismatchPass<'a> {
    ybus: &'a AdmittanceGraph,
    state: &'a [Complex64],
    dp: Vec<f64>,
    dq: Vec<f64>,
}

impl SuperstepProgram for MismatchPass<'_> {
    type Acc = Sum<Complex64>;
    type Global = (Max, Max);
    type Update = (f64, f64);

    fn edge_phase(&self, _: &PropertyGraph, v: VertexId, inc: Incidence) -> Sum<Complex64> {
        Sum(self.ybus.coupling(v, inc) * self.state[inc.neighbor])
    }

    fn vertex_phase(&self, _: &PropertyGraph, v: VertexId, acc: Sum<Complex64>) -> ((f64, f64), (Max, Max)) {
        let current = self.ybus.y_diag()[v] * self.state[v] + acc.0;
        let s = self.state[v] * current.conj();
        let kind = self.ybus.kinds()[v];
        let dp = if kind == BusKind::Slack { 0.0 } else { self.ybus.p_spec()[v] - s.re };
        let dq = if kind == BusKind::Pq { self.ybus.q_spec()[v] - s.im } else { 0.0 };
        ((dp, dq), (Max(dp.abs()), Max(dq.abs())))
    }

    fn apply(&mut self, v: VertexId, (dp, dq): (f64, f64)) {
        self.dp[v] = dp;
        self.dq[v] = dq;
    }
}

/// Evaluates `ΔP`, `ΔQ` and MBPIM at `state` in one superstep.
///
/// Only max-reductions are involved, so the result does not depend on the
/// execution mode.
pub fn compute_mismatch(ybus: &AdmittanceGraph, state: &[Complex64]) -> Result<MismatchResult, NetworkError> {
    compute_mismatch_with(&Engine::default(), ybus, state)
}

pub fn compute_mismatch_with(
    engine: &Engine,
    ybus: &AdmittanceGraph,
    state: &[Complex64],
) -> Result<MismatchResult, NetworkError> {
    let n = ybus.bus_count();
    if state.len() != n {
        return Err(NetworkError::Dimension {
            expected: n,
            found: state.len(),
        });
    }
    let mut pass = MismatchPass {
        ybus,
        state,
        dp: vec![0.0; n],
        dq: vec![0.0; n],
    };
    let (max_dp, max_dq) = engine.superstep(ybus.graph(), &mut pass);
    let max_dp = max_dp.0.max(0.0);
    let max_dq = max_dq.0.max(0.0);
    Ok(MismatchResult {
        dp: pass.dp,
        dq: pass.dq,
        max_dp,
        max_dq,
        mbpim: if max_dp.is_nan() || max_dq.is_nan() {
            f64::NAN
        } else {
            max_dp.max(max_dq)
        },
    })
}
