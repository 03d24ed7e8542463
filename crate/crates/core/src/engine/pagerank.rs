//! PageRank over an undirected graph, used as a workload for the engine.
//!
//! Every edge is a link in both directions and a vertex's out-degree is its
//! degree. Isolated vertices receive `(1 - d) / N` and pass nothing on, so
//! the rank sum drops below one when they exist.

use super::accumulate::{Accumulator, Max, Sum};
use super::graph::{Incidence, PropertyGraph, VertexId};
use super::superstep::{Engine, SuperstepProgram, Termination};
use super::EngineError;

#[derive(Debug, Clone, PartialEq)]
pub struct PageRank {
    pub ranks: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    pub last_change: f64,
}

struct RankProgram {
    damping: f64,
    base: f64,
    ranks: Vec<f64>,
}

impl SuperstepProgram for RankProgram {
    type Acc = Sum<f64>;
    type Global = Max;
    type Update = f64;

    fn edge_phase(&self, graph: &PropertyGraph, _v: VertexId, inc: Incidence) -> Sum<f64> {
        Sum(self.ranks[inc.neighbor] / graph.degree(inc.neighbor) as f64)
    }

    fn vertex_phase(&self, _graph: &PropertyGraph, v: VertexId, acc: Sum<f64>) -> (f64, Max) {
        let next = self.base + self.damping * acc.0;
        (next, Max((next - self.ranks[v]).abs()))
    }

    fn apply(&mut self, v: VertexId, update: f64) {
        self.ranks[v] = update;
    }
}

pub fn pagerank(
    engine: &Engine,
    graph: &PropertyGraph,
    damping: f64,
    max_iters: usize,
    tol: f64,
) -> Result<PageRank, EngineError> {
    let n = graph.vertex_count();
    if n == 0 {
        return Err(EngineError::EmptyGraph);
    }
    if !(damping > 0.0 && damping < 1.0) {
        return Err(EngineError::InvalidParameter(format!(
            "damping factor {damping} outside (0, 1)"
        )));
    }
    let mut program = RankProgram {
        damping,
        base: (1.0 - damping) / n as f64,
        ranks: vec![1.0 / n as f64; n],
    };
    let outcome = engine.run_supersteps(graph, &mut program, max_iters, |_, change| change.0 < tol);
    let last = outcome.last_global;
    Ok(PageRank {
        ranks: program.ranks,
        iterations: outcome.steps,
        termination: outcome.termination,
        last_change: if outcome.steps == 0 {
            Max::identity().0
        } else {
            last.0
        },
    })
}
