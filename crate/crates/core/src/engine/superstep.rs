//! Bulk-synchronous execution of vertex programs.
//!
//! A superstep has two phases followed by a barrier:
//!
//! 1. **edge phase**: for every active vertex, each incident edge emits a
//!    contribution that is folded into the vertex accumulator;
//! 2. **vertex phase**: every active vertex consumes its accumulator,
//!    produces an update and a contribution to the global accumulator.
//!
//! Both phases take the program by shared reference, so they only observe
//! values committed at the previous barrier. Updates are applied afterwards
//! through [`SuperstepProgram::apply`], and the reduced global value is handed
//! to [`SuperstepProgram::barrier`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::accumulate::Accumulator;
use super::graph::{Incidence, PropertyGraph, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ExecMode {
    /// Vertices processed on the rayon pool; global reductions regroup freely.
    #[default]
    Parallel,
    /// Vertices processed sequentially in id order (or a supplied order);
    /// global reductions fold in that same order.
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Stopped,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome<G> {
    pub steps: usize,
    pub termination: Termination,
    pub last_global: G,
}

pub trait SuperstepProgram: Sync {
    type Acc: Accumulator;
    type Global: Accumulator;
    type Update: Send;

    fn is_active(&self, _graph: &PropertyGraph, _v: VertexId) -> bool {
        true
    }

    /// Programs without neighbour reads can skip the gather entirely.
    fn has_edge_phase(&self) -> bool {
        true
    }

    fn edge_phase(&self, graph: &PropertyGraph, v: VertexId, incidence: Incidence) -> Self::Acc;

    fn vertex_phase(
        &self,
        graph: &PropertyGraph,
        v: VertexId,
        acc: Self::Acc,
    ) -> (Self::Update, Self::Global);

    fn apply(&mut self, v: VertexId, update: Self::Update);

    fn barrier(&mut self, _global: &Self::Global) {}
}

#[derive(Debug, Clone, Default)]
pub struct Engine {
    mode: ExecMode,
    visit_order: Option<Vec<VertexId>>,
}

impl Engine {
    pub fn new(mode: ExecMode) -> Self {
        Self {
            mode,
            visit_order: None,
        }
    }

    pub fn parallel() -> Self {
        Self::new(ExecMode::Parallel)
    }

    pub fn deterministic() -> Self {
        Self::new(ExecMode::Deterministic)
    }

    /// Fixes the order in which vertices are visited in deterministic mode.
    /// Must be a permutation of the vertex ids.
    pub fn with_visit_order(mut self, order: Vec<VertexId>) -> Self {
        self.visit_order = Some(order);
        self
    }

    pub fn mode(&self) -> ExecMode {
        self.mode
    }

    fn compute<P: SuperstepProgram>(
        graph: &PropertyGraph,
        program: &P,
        v: VertexId,
    ) -> Option<(VertexId, P::Update, P::Global)> {
        if !program.is_active(graph, v) {
            return None;
        }
        let mut acc = P::Acc::identity();
        if program.has_edge_phase() {
            for &inc in graph.incident(v) {
                acc = acc.combine(program.edge_phase(graph, v, inc));
            }
        }
        let (update, global) = program.vertex_phase(graph, v, acc);
        Some((v, update, global))
    }

    /// Executes one superstep and returns the reduced global value.
    pub fn superstep<P: SuperstepProgram>(&self, graph: &PropertyGraph, program: &mut P) -> P::Global {
        let n = graph.vertex_count();
        let shared: &P = program;
        let (results, global) = match self.mode {
            ExecMode::Parallel => {
                let (results, globals): (Vec<_>, Vec<_>) = (0..n)
                    .into_par_iter()
                    .with_min_len(64)
                    .filter_map(|v| Self::compute(graph, shared, v))
                    .map(|(v, update, global)| ((v, update), global))
                    .unzip();
                let global = globals
                    .into_par_iter()
                    .with_min_len(64)
                    .reduce(P::Global::identity, P::Global::combine);
                (results, global)
            }
            ExecMode::Deterministic => {
                let results: Vec<(VertexId, P::Update, P::Global)> = match &self.visit_order {
                    Some(order) => order
                        .iter()
                        .filter_map(|&v| Self::compute(graph, shared, v))
                        .collect(),
                    None => (0..n).filter_map(|v| Self::compute(graph, shared, v)).collect(),
                };
                let global = results
                    .iter()
                    .fold(P::Global::identity(), |acc, r| acc.combine(r.2));
                (results.into_iter().map(|(v, u, _)| (v, u)).collect::<Vec<_>>(), global)
            }
        };
        for (v, update) in results {
            program.apply(v, update);
        }
        program.barrier(&global);
        global
    }

    /// Runs supersteps until `stop` returns true or `max_steps` is reached.
    pub fn run_supersteps<P, F>(
        &self,
        graph: &PropertyGraph,
        program: &mut P,
        max_steps: usize,
        mut stop: F,
    ) -> RunOutcome<P::Global>
    where
        P: SuperstepProgram,
        F: FnMut(usize, &P::Global) -> bool,
    {
        let mut last = P::Global::identity();
        for step in 1..=max_steps {
            last = self.superstep(graph, program);
            if stop(step, &last) {
                return RunOutcome {
                    steps: step,
                    termination: Termination::Stopped,
                    last_global: last,
                };
            }
        }
        RunOutcome {
            steps: max_steps,
            termination: Termination::BudgetExhausted,
            last_global: last,
        }
    }

    /// Edge-parallel map over every edge record.
    pub fn map_edges<T, F>(&self, graph: &PropertyGraph, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&super::graph::EdgeRecord) -> T + Sync,
    {
        match self.mode {
            ExecMode::Parallel => graph.edges().par_iter().map(&f).collect(),
            ExecMode::Deterministic => graph.edges().iter().map(f).collect(),
        }
    }
}
