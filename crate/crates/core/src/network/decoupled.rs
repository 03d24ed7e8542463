//! Fast-decoupled coefficient matrices (XB scheme) on a property graph.
//!
//! `B′` uses `1/x` per branch only (no resistance, charging, shunts or taps).
//! `B″` is `−Im(Ybus)` assembled with phase shifts zeroed, so it keeps
//! resistance, charging, taps and shunts and stays symmetric. Both are kept
//! for every bus; the solver restricts them to non-slack (`B′`) and PQ
//! (`B″`) buses.

use crate::engine::{ColumnId, Engine, Incidence, PropertyGraph, Sum, SuperstepProgram, VertexId};

use super::case::{BusKind, NetworkCase};
use super::ybus::{branch_topology, stamp};
use super::NetworkError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficients {
    BPrime,
    BDoublePrime,
}

#[derive(Debug, Clone, Copy)]
struct Columns {
    bp_diag: ColumnId<f64>,
    bpp_diag: ColumnId<f64>,
    bp_off: ColumnId<f64>,
    bpp_off: ColumnId<f64>,
}

#[derive(Debug, Clone)]
pub struct DecoupledGraph {
    graph: PropertyGraph,
    cols: Columns,
    kinds: Vec<BusKind>,
}

#[derive(Debug, Clone, Copy)]
struct EdgeTerms {
    bp_off: f64,
    bp_self: f64,
    bpp_off: f64,
    bpp_from: f64,
    bpp_to: f64,
}

struct DiagonalGather<'a> {
    terms: &'a [EdgeTerms],
    shunt_b: Vec<f64>,
    bp: Vec<f64>,
    bpp: Vec<f64>,
}

impl SuperstepProgram for DiagonalGather<'_> {
    type Acc = (Sum<f64>, Sum<f64>);
    type Global = ();
    type Update = (f64, f64);

    fn edge_phase(&self, graph: &PropertyGraph, v: VertexId, inc: Incidence) -> Self::Acc {
        let t = &self.terms[inc.edge];
        let end = if graph.edge(inc.edge).from == v { t.bpp_from } else { t.bpp_to };
        (Sum(t.bp_self), Sum(end))
    }

    fn vertex_phase(&self, _: &PropertyGraph, v: VertexId, acc: Self::Acc) -> ((f64, f64), ()) {
        ((acc.0 .0, acc.1 .0 - self.shunt_b[v]), ())
    }

    fn apply(&mut self, v: VertexId, (bp, bpp): (f64, f64)) {
        self.bp[v] = bp;
        self.bpp[v] = bpp;
    }
}

pub fn build_decoupled(case: &NetworkCase) -> Result<DecoupledGraph, NetworkError> {
    build_decoupled_with(&Engine::default(), case)
}

pub fn build_decoupled_with(engine: &Engine, case: &NetworkCase) -> Result<DecoupledGraph, NetworkError> {
    case.slack()?;
    let (mut graph, branch_ids) = branch_topology(case)?;
    for &k in &branch_ids {
        let br = &case.branches[k];
        if br.x == 0.0 {
            return Err(NetworkError::ZeroReactance {
                branch: k,
                from: case.buses[br.from].number,
                to: case.buses[br.to].number,
            });
        }
    }
    let terms = engine.map_edges(&graph, |e| {
        let br = &case.branches[branch_ids[e.id]];
        let s = stamp(br.r, br.x, br.b, br.tap, 0.0);
        EdgeTerms {
            bp_off: -1.0 / br.x,
            bp_self: 1.0 / br.x,
            bpp_off: -s.y_ft.im,
            bpp_from: -s.y_ff.im,
            bpp_to: -s.y_tt.im,
        }
    });
    let n = case.bus_count();
    let mut gather = DiagonalGather {
        terms: &terms,
        shunt_b: case.buses.iter().map(|b| b.bs).collect(),
        bp: vec![0.0; n],
        bpp: vec![0.0; n],
    };
    engine.superstep(&graph, &mut gather);
    let (bp, bpp) = (gather.bp, gather.bpp);
    let cols = Columns {
        bp_diag: graph.vertex_attrs.insert("bp_diag", bp)?,
        bpp_diag: graph.vertex_attrs.insert("bpp_diag", bpp)?,
        bp_off: graph.edge_attrs.insert("bp_off", terms.iter().map(|t| t.bp_off).collect())?,
        bpp_off: graph.edge_attrs.insert("bpp_off", terms.iter().map(|t| t.bpp_off).collect())?,
    };
    Ok(DecoupledGraph {
        graph,
        cols,
        kinds: case.buses.iter().map(|b| b.kind).collect(),
    })
}

impl DecoupledGraph {
    pub fn graph(&self) -> &PropertyGraph {
        &self.graph
    }

    pub fn kinds(&self) -> &[BusKind] {
        &self.kinds
    }

    pub fn diagonal(&self, which: Coefficients) -> &[f64] {
        match which {
            Coefficients::BPrime => self.graph.vertex_attrs.get(self.cols.bp_diag),
            Coefficients::BDoublePrime => self.graph.vertex_attrs.get(self.cols.bpp_diag),
        }
    }

    pub fn off_diagonal(&self, which: Coefficients) -> &[f64] {
        match which {
            Coefficients::BPrime => self.graph.edge_attrs.get(self.cols.bp_off),
            Coefficients::BDoublePrime => self.graph.edge_attrs.get(self.cols.bpp_off),
        }
    }

    /// Buses on which the matrix is solved: non-slack for `B′`, PQ for `B″`.
    pub fn index_set(&self, which: Coefficients) -> Vec<bool> {
        self.kinds
            .iter()
            .map(|k| match which {
                Coefficients::BPrime => *k != BusKind::Slack,
                Coefficients::BDoublePrime => *k == BusKind::Pq,
            })
            .collect()
    }

    /// Dense matrix over all buses (no index-set restriction).
    pub fn to_dense(&self, which: Coefficients) -> Vec<Vec<f64>> {
        let n = self.graph.vertex_count();
        let mut m = vec![vec![0.0; n]; n];
        for (i, d) in self.diagonal(which).iter().enumerate() {
            m[i][i] = *d;
        }
        let off = self.off_diagonal(which);
        for e in self.graph.edges() {
            m[e.from][e.to] += off[e.id];
            m[e.to][e.from] += off[e.id];
        }
        m
    }
}
