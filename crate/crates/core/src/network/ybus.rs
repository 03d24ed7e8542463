//! Bus admittance matrix carried on a property graph.
//!
//! Vertex `i` holds `Y_ii`, the scheduled injections and the bus kind; edge
//! `e = (f, t)` holds the directed pair `Y_ft` and `Y_tf`. One in-service
//! branch becomes one edge, so parallel branches are parallel edges and the
//! matrix entry is their sum.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::engine::{ColumnId, Engine, GraphBuilder, Incidence, PropertyGraph, Sum, SuperstepProgram, VertexId};

use super::case::{BusKind, NetworkCase};
use super::NetworkError;

/// π-model stamp of one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BranchStamp {
    pub y_ff: Complex64,
    pub y_ft: Complex64,
    pub y_tf: Complex64,
    pub y_tt: Complex64,
}

/// Stamp with the tap on the from side: `a = t·e^{jφ}`,
/// `Y_ff = (y + jb/2)/t²`, `Y_ft = −y/conj(a)`, `Y_tf = −y/a`, `Y_tt = y + jb/2`.
pub(crate) fn stamp(r: f64, x: f64, b: f64, tap: f64, shift: f64) -> BranchStamp {
    let y = Complex64::new(1.0, 0.0) / Complex64::new(r, x);
    let a = Complex64::from_polar(tap, shift);
    let y_tt = y + Complex64::new(0.0, b / 2.0);
    BranchStamp {
        y_ff: y_tt / (tap * tap),
        y_ft: -y / a.conj(),
        y_tf: -y / a,
        y_tt,
    }
}

#[derive(Debug, Clone, Copy)]
struct Columns {
    y_diag: ColumnId<Complex64>,
    p_spec: ColumnId<f64>,
    q_spec: ColumnId<f64>,
    kind: ColumnId<i64>,
    vm_set: ColumnId<f64>,
    v_init: ColumnId<Complex64>,
    y_from_to: ColumnId<Complex64>,
    y_to_from: ColumnId<Complex64>,
    branch: ColumnId<i64>,
}

#[derive(Debug, Clone)]
pub struct AdmittanceGraph {
    graph: PropertyGraph,
    cols: Columns,
    kinds: Vec<BusKind>,
    slack: usize,
}

struct DiagonalAssembly<'a> {
    ff: &'a [Complex64],
    tt: &'a [Complex64],
    shunt: Vec<Complex64>,
    diag: Vec<Complex64>,
}

impl SuperstepProgram for DiagonalAssembly<'_> {
    type Acc = Sum<Complex64>;
    type Global = ();
    type Update = Complex64;

    fn edge_phase(&self, graph: &PropertyGraph, v: VertexId, inc: Incidence) -> Sum<Complex64> {
        let e = graph.edge(inc.edge);
        Sum(if e.from == v { self.ff[inc.edge] } else { self.tt[inc.edge] })
    }

    fn vertex_phase(&self, _: &PropertyGraph, v: VertexId, acc: Sum<Complex64>) -> (Complex64, ()) {
        (acc.0 + self.shunt[v], ())
    }

    fn apply(&mut self, v: VertexId, update: Complex64) {
        self.diag[v] = update;
    }
}

/// Topology over in-service branches. Rejects zero series impedance.
pub(crate) fn branch_topology(case: &NetworkCase) -> Result<(PropertyGraph, Vec<usize>), NetworkError> {
    let n = case.bus_count();
    let mut builder = GraphBuilder::new(n).allow_parallel(true);
    let mut ids = Vec::new();
    for (k, br) in case.in_service_branches() {
        if br.from >= n || br.to >= n || br.from == br.to {
            return Err(NetworkError::InvalidBranch {
                branch: k,
                reason: "endpoints must be two distinct existing buses".into(),
            });
        }
        if br.r == 0.0 && br.x == 0.0 {
            return Err(NetworkError::ZeroImpedance {
                branch: k,
                from: case.buses[br.from].number,
                to: case.buses[br.to].number,
            });
        }
        builder = builder.edge(br.from, br.to);
        ids.push(k);
    }
    Ok((builder.build()?, ids))
}

/// Assembles Ybus as one vertex-centric pass: an edge map computes each
/// branch stamp, then a superstep gathers the diagonal and adds bus shunts.
pub fn build_ybus(case: &NetworkCase) -> Result<AdmittanceGraph, NetworkError> {
    build_ybus_with(&Engine::default(), case)
}

pub fn build_ybus_with(engine: &Engine, case: &NetworkCase) -> Result<AdmittanceGraph, NetworkError> {
    let slack = case.slack()?;
    let (mut graph, branch_ids) = branch_topology(case)?;

    let stamps = engine.map_edges(&graph, |e| {
        let br = &case.branches[branch_ids[e.id]];
        stamp(br.r, br.x, br.b, br.tap, br.shift)
    });
    let ff: Vec<Complex64> = stamps.iter().map(|s| s.y_ff).collect();
    let tt: Vec<Complex64> = stamps.iter().map(|s| s.y_tt).collect();
    let mut assembly = DiagonalAssembly {
        ff: &ff,
        tt: &tt,
        shunt: case.buses.iter().map(|b| Complex64::new(b.gs, b.bs)).collect(),
        diag: vec![Complex64::new(0.0, 0.0); case.bus_count()],
    };
    engine.superstep(&graph, &mut assembly);
    let diag = assembly.diag;

    let kinds: Vec<BusKind> = case.buses.iter().map(|b| b.kind).collect();
    let va = &mut graph.vertex_attrs;
    let cols = Columns {
        y_diag: va.insert("y_diag", diag)?,
        p_spec: va.insert("p_spec", case.buses.iter().map(|b| b.pg - b.pd).collect())?,
        q_spec: va.insert("q_spec", case.buses.iter().map(|b| b.qg - b.qd).collect())?,
        kind: va.insert("kind", kinds.iter().map(|k| i64::from(k.matpower_code())).collect())?,
        vm_set: va.insert(
            "vm_set",
            case.buses.iter().map(|b| b.vm_setpoint.unwrap_or(f64::NAN)).collect(),
        )?,
        v_init: va.insert(
            "v_init",
            case.buses
                .iter()
                .map(|b| Complex64::from_polar(b.vm_init, b.va_init))
                .collect(),
        )?,
        y_from_to: graph.edge_attrs.insert("y_from_to", stamps.iter().map(|s| s.y_ft).collect())?,
        y_to_from: graph.edge_attrs.insert("y_to_from", stamps.iter().map(|s| s.y_tf).collect())?,
        branch: graph
            .edge_attrs
            .insert("branch", branch_ids.iter().map(|&k| k as i64).collect())?,
    };
    Ok(AdmittanceGraph {
        graph,
        cols,
        kinds,
        slack,
    })
}

impl AdmittanceGraph {
    pub fn graph(&self) -> &PropertyGraph {
        &self.graph
    }

    pub fn bus_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn kinds(&self) -> &[BusKind] {
        &self.kinds
    }

    /// MATPOWER bus-type codes as stored in the `kind` column.
    pub fn kind_codes(&self) -> &[i64] {
        self.graph.vertex_attrs.get(self.cols.kind)
    }

    pub fn y_diag(&self) -> &[Complex64] {
        self.graph.vertex_attrs.get(self.cols.y_diag)
    }

    pub fn p_spec(&self) -> &[f64] {
        self.graph.vertex_attrs.get(self.cols.p_spec)
    }

    pub fn q_spec(&self) -> &[f64] {
        self.graph.vertex_attrs.get(self.cols.q_spec)
    }

    /// Voltage setpoints; NaN on PQ buses.
    pub fn vm_setpoint(&self) -> &[f64] {
        self.graph.vertex_attrs.get(self.cols.vm_set)
    }

    pub fn initial_voltage(&self) -> &[Complex64] {
        self.graph.vertex_attrs.get(self.cols.v_init)
    }

    /// Case branch index carried by each edge.
    pub fn branch_of_edge(&self, edge: usize) -> usize {
        self.graph.edge_attrs.get(self.cols.branch)[edge] as usize
    }

    /// `Y_{v, neighbor}` contributed by the incident edge.
    #[inline]
    pub fn coupling(&self, v: VertexId, inc: Incidence) -> Complex64 {
        let e = self.graph.edge(inc.edge);
        if e.from == v {
            self.graph.edge_attrs.get(self.cols.y_from_to)[inc.edge]
        } else {
            self.graph.edge_attrs.get(self.cols.y_to_from)[inc.edge]
        }
    }

    /// Couplings for every edge as `(Y_ft, Y_tf)`.
    pub fn edge_admittances(&self) -> (&[Complex64], &[Complex64]) {
        (
            self.graph.edge_attrs.get(self.cols.y_from_to),
            self.graph.edge_attrs.get(self.cols.y_to_from),
        )
    }

    /// Dense reconstruction, summing parallel edges.
    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let n = self.bus_count();
        let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for (i, d) in self.y_diag().iter().enumerate() {
            y[i][i] = *d;
        }
        let (ft, tf) = self.edge_admittances();
        for e in self.graph.edges() {
            y[e.from][e.to] += ft[e.id];
            y[e.to][e.from] += tf[e.id];
        }
        y
    }

    /// Non-zero Ybus entries as CSV triplets keyed by external bus number.
    pub fn write_triplets_csv<W: Write>(&self, case: &NetworkCase, out: &mut W) -> io::Result<()> {
        writeln!(out, "row,col,real,imag")?;
        let dense = self.to_dense();
        for (i, row) in dense.iter().enumerate() {
            for (j, y) in row.iter().enumerate() {
                if y.re != 0.0 || y.im != 0.0 {
                    writeln!(out, "{},{},{},{}", case.buses[i].number, case.buses[j].number, y.re, y.im)?;
                }
            }
        }
        Ok(())
    }
}
