//! Damped-Jacobi power-flow iteration and its bi-level (two half-sweep)
//! generalisation, run as supersteps on the admittance graph.

use std::collections::VecDeque;
use std::io::{self, Write};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{Engine, ExecMode, Incidence, Min, PropertyGraph, Sum, SuperstepProgram, VertexId};
use crate::error::SolveError;
use crate::network::{compute_mismatch_with, AdmittanceGraph, BusKind};
use crate::trace::{Convergence, IterationTrace, Stage, TraceRecord};

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_TOL_V: f64 = 2e-4;
pub const DEFAULT_MAX_ITERS: usize = 5000;
const COLLAPSE_FLOOR: f64 = 1e-6;
const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPartition {
    /// `None` only for the slack bus.
    pub level_of: Vec<Option<Level>>,
    pub intra_level_edge_count: usize,
    pub intra_level_edge_fraction: f64,
}

impl LevelPartition {
    /// Every non-slack bus in level A: plain damped Jacobi.
    pub fn single_level(ybus: &AdmittanceGraph) -> Self {
        let slack = ybus.slack();
        let levels: Vec<Level> = vec![Level::A; ybus.bus_count()];
        Self::from_levels(ybus.graph(), slack, levels)
    }

    fn from_levels(graph: &PropertyGraph, root: VertexId, levels: Vec<Level>) -> Self {
        let count = graph.edges().iter().filter(|e| levels[e.from] == levels[e.to]).count();
        let fraction = if graph.edge_count() == 0 {
            0.0
        } else {
            count as f64 / graph.edge_count() as f64
        };
        let mut level_of: Vec<Option<Level>> = levels.into_iter().map(Some).collect();
        if root < level_of.len() {
            level_of[root] = None;
        }
        Self {
            level_of,
            intra_level_edge_count: count,
            intra_level_edge_fraction: fraction,
        }
    }

    pub fn members(&self, level: Level) -> Vec<bool> {
        self.level_of.iter().map(|l| *l == Some(level)).collect()
    }
}

/// Greedy BFS two-colouring from the slack bus.
pub fn partition_levels(ybus: &AdmittanceGraph) -> LevelPartition {
    partition_graph(ybus.graph(), ybus.slack())
}

/// Colouring on a bare graph. The root takes level A for the purpose of
/// colouring its neighbours but is reported without a level.
pub fn partition_graph(graph: &PropertyGraph, root: VertexId) -> LevelPartition {
    let n = graph.vertex_count();
    let mut level: Vec<Option<Level>> = vec![None; n];
    let mut queued = vec![false; n];
    let mut queue = VecDeque::new();
    let starts = std::iter::once(root).filter(|&r| r < n).chain(0..n);
    for start in starts {
        if queued[start] {
            continue;
        }
        queued[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            let (mut a, mut b) = (0usize, 0usize);
            for inc in graph.incident(v) {
                match level[inc.neighbor] {
                    Some(Level::A) => a += 1,
                    Some(Level::B) => b += 1,
                    None => {}
                }
            }
            level[v] = Some(if a > b { Level::B } else { Level::A });
            for inc in graph.incident(v) {
                if !queued[inc.neighbor] {
                    queued[inc.neighbor] = true;
                    queue.push_back(inc.neighbor);
                }
            }
        }
    }
    LevelPartition::from_levels(graph, root, level.into_iter().map(|l| l.unwrap_or(Level::A)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiprConfig {
    pub damping: f64,
    pub tol_vr: f64,
    pub tol_va: f64,
    pub max_iters: usize,
    pub exec: ExecMode,
}

impl Default for BiprConfig {
    fn default() -> Self {
        Self {
            damping: DEFAULT_DAMPING,
            tol_vr: DEFAULT_TOL_V,
            tol_va: DEFAULT_TOL_V,
            max_iters: DEFAULT_MAX_ITERS,
            exec: ExecMode::Parallel,
        }
    }
}

impl BiprConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SolveError::InvalidConfig(format!("damping {} outside (0, 1]", self.damping)));
        }
        if !(self.tol_vr > 0.0 && self.tol_va > 0.0) {
            return Err(SolveError::InvalidConfig("voltage tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One half-sweep (or full sweep) of the Jacobi update over `active` buses.
struct Sweep<'a> {
    ybus: &'a AdmittanceGraph,
    active: &'a [bool],
    damping: Option<f64>,
    state: Vec<Complex64>,
}

impl SuperstepProgram for Sweep<'_> {
    type Acc = Sum<Complex64>;
    type Global = Min;
    type Update = Complex64;

    fn is_active(&self, _: &PropertyGraph, v: VertexId) -> bool {
        self.active[v] && self.ybus.kinds()[v] != BusKind::Slack
    }

    fn edge_phase(&self, _: &PropertyGraph, v: VertexId, inc: Incidence) -> Sum<Complex64> {
        Sum(self.ybus.coupling(v, inc) * self.state[inc.neighbor])
    }

    fn vertex_phase(&self, _: &PropertyGraph, v: VertexId, acc: Sum<Complex64>) -> (Complex64, Min) {
        let vi = self.state[v];
        let y_ii = self.ybus.y_diag()[v];
        let kind = self.ybus.kinds()[v];
        let q = if kind == BusKind::Pv {
            -(vi.conj() * (y_ii * vi + acc.0)).im
        } else {
            self.ybus.q_spec()[v]
        };
        let s_conj = Complex64::new(self.ybus.p_spec()[v], -q);
        let raw = (s_conj / vi.conj() - acc.0) / y_ii;
        let mut next = match self.damping {
            None => raw,
            Some(d) => vi * (1.0 - d) + raw * d,
        };
        if kind == BusKind::Pv {
            next *= self.ybus.vm_setpoint()[v] / next.norm();
        }
        (next, Min(next.norm()))
    }

    fn apply(&mut self, v: VertexId, update: Complex64) {
        self.state[v] = update;
    }
}

fn check_state(ybus: &AdmittanceGraph, state: &[Complex64]) -> Result<(), SolveError> {
    if state.len() != ybus.bus_count() {
        return Err(SolveError::Dimension {
            expected: ybus.bus_count(),
            found: state.len(),
        });
    }
    // bus numbers are not carried by the graph; report positions
    for (i, y) in ybus.y_diag().iter().enumerate() {
        if ybus.kinds()[i] != BusKind::Slack && *y == Complex64::new(0.0, 0.0) {
            return Err(SolveError::ZeroDiagonal { index: i });
        }
    }
    Ok(())
}

fn sweep(
    engine: &Engine,
    ybus: &AdmittanceGraph,
    state: Vec<Complex64>,
    active: &[bool],
    damping: Option<f64>,
    iteration: usize,
) -> Result<Vec<Complex64>, SolveError> {
    let mut program = Sweep {
        ybus,
        active,
        damping,
        state,
    };
    let Min(smallest) = engine.superstep(ybus.graph(), &mut program);
    if smallest.is_nan() {
        return Err(SolveError::NonFinite { iteration });
    }
    if smallest < COLLAPSE_FLOOR {
        let bus = (0..program.state.len())
            .find(|&v| active[v] && program.state[v].norm() < COLLAPSE_FLOOR)
            .unwrap_or(0);
        return Err(SolveError::VoltageCollapse {
            index: bus,
            iteration,
        });
    }
    Ok(program.state)
}

/// The undamped Jacobi update over every non-slack bus.
pub fn jacobi_step(engine: &Engine, ybus: &AdmittanceGraph, state: &[Complex64]) -> Result<Vec<Complex64>, SolveError> {
    check_state(ybus, state)?;
    let all = vec![true; state.len()];
    sweep(engine, ybus, state.to_vec(), &all, None, 1)
}

/// The damped Jacobi update `V ← (1−d)V + d·J(V)` over every non-slack bus.
pub fn damped_jacobi_step(
    engine: &Engine,
    ybus: &AdmittanceGraph,
    state: &[Complex64],
    d: f64,
) -> Result<Vec<Complex64>, SolveError> {
    check_state(ybus, state)?;
    let all = vec![true; state.len()];
    sweep(engine, ybus, state.to_vec(), &all, Some(d), 1)
}

#[derive(Debug, Clone)]
pub struct BiprResult {
    pub state: Vec<Complex64>,
    pub trace: IterationTrace,
    pub termination: Convergence,
    pub iterations: usize,
}

fn max_change(old: &[Complex64], new: &[Complex64]) -> (f64, f64) {
    old.iter().zip(new).fold((0.0f64, 0.0f64), |(r, i), (a, b)| {
        let d = b - a;
        (r.max(d.re.abs()), i.max(d.im.abs()))
    })
}

/// Iterates A then B half-sweeps until both voltage-change maxima fall
/// below tolerance.
pub fn bilevel_solve(
    ybus: &AdmittanceGraph,
    state0: &[Complex64],
    partition: &LevelPartition,
    config: &BiprConfig,
) -> Result<BiprResult, SolveError> {
    config.validate()?;
    check_state(ybus, state0)?;
    if partition.level_of.len() != ybus.bus_count() {
        return Err(SolveError::Dimension {
            expected: ybus.bus_count(),
            found: partition.level_of.len(),
        });
    }
    let engine = Engine::new(config.exec);
    let level_a = partition.members(Level::A);
    let level_b = partition.members(Level::B);
    let has_b = level_b.iter().any(|&b| b);
    let started = Instant::now();
    let mut trace = IterationTrace::default();
    let mut state = state0.to_vec();
    let mut initial = None;

    for k in 1..=config.max_iters {
        let after_a = sweep(&engine, ybus, state.clone(), &level_a, Some(config.damping), k)?;
        let next = if has_b {
            sweep(&engine, ybus, after_a, &level_b, Some(config.damping), k)?
        } else {
            after_a
        };
        let (d_vr, d_va) = max_change(&state, &next);
        state = next;
        let mis = compute_mismatch_with(&engine, ybus, &state)?;
        trace.push(TraceRecord {
            iteration: k,
            stage: Stage::Bipr,
            d_vr,
            d_va,
            d_p: mis.max_dp,
            d_q: mis.max_dq,
            mbpim: mis.mbpim,
            millis: started.elapsed().as_secs_f64() * 1e3,
            inner_iterations: None,
            inner_residual: None,
        });
        let residual = d_vr.max(d_va);
        if !residual.is_finite() || !mis.mbpim.is_finite() {
            return Err(SolveError::NonFinite { iteration: k });
        }
        let base = *initial.get_or_insert(residual);
        if base > 0.0 && residual > DIVERGENCE_FACTOR * base {
            return Err(SolveError::Divergence {
                iteration: k,
                residual,
                initial: base,
            });
        }
        if d_vr < config.tol_vr && d_va < config.tol_va {
            return Ok(BiprResult {
                state,
                trace,
                termination: Convergence::Converged,
                iterations: k,
            });
        }
    }
    Ok(BiprResult {
        state,
        iterations: config.max_iters,
        trace,
        termination: Convergence::BudgetExhausted,
    })
}

/// CSV with `iteration,stage,d_vr,d_va,mbpim,millis`.
pub fn write_bipr_trace<W: Write>(trace: &IterationTrace, out: &mut W) -> io::Result<()> {
    writeln!(out, "iteration,stage,d_vr,d_va,mbpim,millis")?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:.3}",
            r.iteration,
            r.stage.as_str(),
            r.d_vr,
            r.d_va,
            r.mbpim,
            r.millis
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::build_graph;
    use crate::network::{build_ybus, Branch, Bus, NetworkCase};

    fn two_bus(pd: f64) -> NetworkCase {
        let mut load = Bus::new(2, BusKind::Pq);
        load.pd = pd;
        NetworkCase {
            name: "t".into(),
            base_mva: 100.0,
            buses: vec![Bus::new(1, BusKind::Slack), load],
            branches: vec![Branch::line(0, 1, 0.0, 0.1, 0.0)],
        }
    }

    #[test]
    fn star_is_bipartite() {
        let g = build_graph(6, (1..6).map(|i| (0, i))).unwrap();
        let p = partition_graph(&g, 1);
        assert_eq!(p.intra_level_edge_count, 0);
        let hub = p.level_of[0].unwrap();
        for leaf in 2..6 {
            assert_ne!(p.level_of[leaf].unwrap(), hub);
        }
        assert_eq!(p.level_of[1], None);
    }

    #[test]
    fn triangle_has_one_intra_edge() {
        let g = build_graph(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let p = partition_graph(&g, 0);
        assert_eq!(p.intra_level_edge_count, 1);
        assert!((p.intra_level_edge_fraction - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_bus_converges_to_known_solution() {
        let ybus = build_ybus(&two_bus(0.1)).unwrap();
        let cfg = BiprConfig {
            tol_vr: 1e-12,
            tol_va: 1e-12,
            exec: ExecMode::Deterministic,
            ..BiprConfig::default()
        };
        let flat = vec![Complex64::new(1.0, 0.0); 2];
        let res = bilevel_solve(&ybus, &flat, &partition_levels(&ybus), &cfg).unwrap();
        assert!(res.termination.converged());
        // P = V sinθ / x with V cosθ − V² = 0 for zero Q
        let v = res.state[1];
        assert!((v.norm() * (-v.arg()).sin() / 0.1 - 0.1).abs() < 1e-9);
        assert_eq!(res.state[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn empty_level_b_matches_damped_step() {
        let ybus = build_ybus(&two_bus(0.3)).unwrap();
        let flat = vec![Complex64::new(1.0, 0.0); 2];
        let cfg = BiprConfig {
            max_iters: 1,
            exec: ExecMode::Deterministic,
            ..BiprConfig::default()
        };
        let one = bilevel_solve(&ybus, &flat, &LevelPartition::single_level(&ybus), &cfg).unwrap();
        let step = damped_jacobi_step(&Engine::deterministic(), &ybus, &flat, cfg.damping).unwrap();
        assert_eq!(one.state, step);
    }

    #[test]
    fn rejects_bad_damping() {
        let cfg = BiprConfig {
            damping: 0.0,
            ..BiprConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(BiprConfig { damping: 1.0, ..cfg }.validate().is_ok());
    }
}
