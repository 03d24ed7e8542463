use serde::{Deserialize, Serialize};

use crate::engine::{Engine, ExecMode, Incidence, PropertyGraph, Sum, SuperstepProgram, VertexId};
use crate::error::SolveError;
use crate::trace::Convergence;

use super::system::GraphSystem;

pub const DEFAULT_INNER_TOL: f64 = 1e-8;
pub const DEFAULT_INNER_MAX_ITERS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Preconditioner {
    /// `M = diag(A)`.
    #[default]
    Diagonal,
    /// `M = I`, plain conjugate gradient.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcgConfig {
    /// Absolute bound on `‖r‖₂`.
    pub tol: f64,
    pub max_iters: usize,
    pub preconditioner: Preconditioner,
    pub exec: ExecMode,
}

impl Default for DcgConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_INNER_TOL,
            max_iters: DEFAULT_INNER_MAX_ITERS,
            preconditioner: Preconditioner::Diagonal,
            exec: ExecMode::Parallel,
        }
    }
}

/// Scalars of one completed iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcgStep {
    pub iteration: usize,
    pub alpha: f64,
    /// `None` on the first iteration, where `p = z`.
    pub beta: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Init,
    DirectionGather { beta: f64 },
    Update { alpha: f64 },
}

struct Slots<'s, 'g> {
    system: &'s GraphSystem<'g>,
    precond: Preconditioner,
    phase: Phase,
    x: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    temp_ap: Vec<f64>,
}

impl Slots<'_, '_> {
    fn precondition(&self, v: VertexId, r: f64) -> f64 {
        match self.precond {
            Preconditioner::Diagonal => r / self.system.diag()[v],
            Preconditioner::Identity => r,
        }
    }
}

impl SuperstepProgram for Slots<'_, '_> {
    type Acc = Sum<f64>;
    type Global = (Sum<f64>, Sum<f64>);
    type Update = [f64; 3];

    fn is_active(&self, _: &PropertyGraph, v: VertexId) -> bool {
        self.system.in_set(v)
    }

    fn has_edge_phase(&self) -> bool {
        !matches!(self.phase, Phase::Update { .. })
    }

    fn edge_phase(&self, _: &PropertyGraph, _: VertexId, inc: Incidence) -> Sum<f64> {
        let j = inc.neighbor;
        if !self.system.in_set(j) {
            return Sum(0.0);
        }
        let a_ij = self.system.off()[inc.edge];
        match self.phase {
            Phase::Init => Sum(a_ij * self.x[j]),
            // the neighbour's new direction, formed on the fly
            Phase::DirectionGather { beta } => Sum(a_ij * (self.z[j] + beta * self.p[j])),
            Phase::Update { .. } => Sum(0.0),
        }
    }

    fn vertex_phase(&self, _: &PropertyGraph, v: VertexId, acc: Sum<f64>) -> ([f64; 3], (Sum<f64>, Sum<f64>)) {
        let a_ii = self.system.diag()[v];
        match self.phase {
            Phase::Init => {
                let r = self.system.b[v] - (a_ii * self.x[v] + acc.0);
                let z = self.precondition(v, r);
                ([self.x[v], r, z], (Sum(r * z), Sum(r * r)))
            }
            Phase::DirectionGather { beta } => {
                let p = self.z[v] + beta * self.p[v];
                let ap = a_ii * p + acc.0;
                ([p, ap, 0.0], (Sum(p * ap), Sum(0.0)))
            }
            Phase::Update { alpha } => {
                let x = self.x[v] + alpha * self.p[v];
                let r = self.r[v] - alpha * self.temp_ap[v];
                let z = self.precondition(v, r);
                ([x, r, z], (Sum(r * z), Sum(r * r)))
            }
        }
    }

    fn apply(&mut self, v: VertexId, u: [f64; 3]) {
        match self.phase {
            Phase::Init | Phase::Update { .. } => {
                self.x[v] = u[0];
                self.r[v] = u[1];
                self.z[v] = u[2];
            }
            Phase::DirectionGather { .. } => {
                self.p[v] = u[0];
                self.temp_ap[v] = u[1];
            }
        }
    }
}

/// Preconditioned conjugate gradient, stepped one iteration at a time.
/// Each iteration is two supersteps: direction update fused with the `A·p`
/// gather, then the `x`, `r`, `z` update.
pub struct DcgIteration<'s, 'g> {
    engine: Engine,
    slots: Slots<'s, 'g>,
    rz: f64,
    rr: f64,
    beta: Option<f64>,
    iterations: usize,
}

impl<'s, 'g> DcgIteration<'s, 'g> {
    pub fn new(
        system: &'s GraphSystem<'g>,
        x0: &[f64],
        preconditioner: Preconditioner,
        exec: ExecMode,
    ) -> Result<Self, SolveError> {
        let n = system.graph().vertex_count();
        if x0.len() != n {
            return Err(SolveError::Dimension {
                expected: n,
                found: x0.len(),
            });
        }
        system.check_structure()?;
        let engine = Engine::new(exec);
        let mut slots = Slots {
            system,
            precond: preconditioner,
            phase: Phase::Init,
            x: x0.to_vec(),
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            temp_ap: vec![0.0; n],
        };
        let (rz, rr) = engine.superstep(system.graph(), &mut slots);
        Ok(Self {
            engine,
            slots,
            rz: rz.0,
            rr: rr.0,
            beta: None,
            iterations: 0,
        })
    }

    pub fn residual_norm(&self) -> f64 {
        self.rr.sqrt()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn x(&self) -> &[f64] {
        &self.slots.x
    }

    pub fn step(&mut self) -> Result<DcgStep, SolveError> {
        let next = self.iterations + 1;
        let beta = self.beta.unwrap_or(0.0);
        self.slots.phase = Phase::DirectionGather { beta };
        let (pap, _) = self.engine.superstep(self.slots.system.graph(), &mut self.slots);
        let pap = pap.0;
        if pap.is_nan() {
            return Err(SolveError::NonFinite { iteration: next });
        }
        if pap <= 0.0 {
            return Err(SolveError::NotPositiveDefinite { iteration: next, pap });
        }
        let alpha = self.rz / pap;
        self.slots.phase = Phase::Update { alpha };
        let (rz_new, rr) = self.engine.superstep(self.slots.system.graph(), &mut self.slots);
        let used_beta = self.beta;
        self.beta = Some(rz_new.0 / self.rz);
        self.rz = rz_new.0;
        self.rr = rr.0;
        self.iterations = next;
        if !self.rr.is_finite() {
            return Err(SolveError::NonFinite { iteration: next });
        }
        Ok(DcgStep {
            iteration: next,
            alpha,
            beta: used_beta,
            residual: self.residual_norm(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct DcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub termination: Convergence,
    pub steps: Vec<DcgStep>,
}

/// Solves `A·x = b`. On budget exhaustion the iterate with the smallest
/// residual is returned.
pub fn dcg_solve(system: &GraphSystem<'_>, x0: &[f64], config: &DcgConfig) -> Result<DcgOutcome, SolveError> {
    if !(config.tol > 0.0) {
        return Err(SolveError::InvalidConfig(format!("inner tolerance {} must be positive", config.tol)));
    }
    let mut it = DcgIteration::new(system, x0, config.preconditioner, config.exec)?;
    let mut steps = Vec::new();
    let mut best = (it.residual_norm(), it.x().to_vec());
    while it.residual_norm() > config.tol {
        if it.iterations() >= config.max_iters {
            return Ok(DcgOutcome {
                x: best.1,
                iterations: it.iterations(),
                residual: best.0,
                termination: Convergence::BudgetExhausted,
                steps,
            });
        }
        let step = it.step()?;
        steps.push(step);
        if step.residual < best.0 {
            best = (step.residual, it.x().to_vec());
        }
    }
    Ok(DcgOutcome {
        x: it.x().to_vec(),
        iterations: it.iterations(),
        residual: it.residual_norm(),
        termination: Convergence::Converged,
        steps,
    })
}
