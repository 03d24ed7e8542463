use std::io::{self, Write};

use super::attributes::AttributeTable;
use super::EngineError;

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRecord {
    pub id: EdgeId,
    pub from: VertexId,
    pub to: VertexId,
}

impl EdgeRecord {
    /// The endpoint opposite to `v`.
    pub fn other(&self, v: VertexId) -> VertexId {
        if self.from == v {
            self.to
        } else {
            self.from
        }
    }
}

/// One entry of a vertex's adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Incidence {
    pub neighbor: VertexId,
    pub edge: EdgeId,
}

/// In-memory undirected property graph.
///
/// Structure is immutable once built. Adjacency is stored in CSR form with
/// every list sorted by `(neighbor, edge)`, which fixes the reduction order
/// of the edge phase. Attributes live in column tables that callers may
/// extend after construction.
#[derive(Debug, Clone)]
pub struct PropertyGraph {
    edges: Vec<EdgeRecord>,
    offsets: Vec<usize>,
    adjacency: Vec<Incidence>,
    pub vertex_attrs: AttributeTable,
    pub edge_attrs: AttributeTable,
}

impl PropertyGraph {
    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> EdgeRecord {
        self.edges[id]
    }

    pub fn incident(&self, v: VertexId) -> &[Incidence] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Dumps vertex and edge attribute tables as CSV.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# vertices")?;
        self.vertex_attrs
            .write_csv(out, &["id", "degree"], |v| vec![v.to_string(), self.degree(v).to_string()])?;
        writeln!(out, "# edges")?;
        self.edge_attrs.write_csv(out, &["id", "from", "to"], |e| {
            let rec = self.edges[e];
            vec![rec.id.to_string(), rec.from.to_string(), rec.to.to_string()]
        })
    }
}

/// Builds a [`PropertyGraph`] from an edge list.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    vertex_count: usize,
    edges: Vec<(VertexId, VertexId)>,
    allow_parallel: bool,
}

impl GraphBuilder {
    pub fn new(vertex_count: usize) -> Self {
        Self {
            vertex_count,
            edges: Vec::new(),
            allow_parallel: false,
        }
    }

    /// Permits several edges between the same unordered pair.
    pub fn allow_parallel(mut self, allow: bool) -> Self {
        self.allow_parallel = allow;
        self
    }

    pub fn edge(mut self, from: VertexId, to: VertexId) -> Self {
        self.edges.push((from, to));
        self
    }

    pub fn edges(mut self, edges: impl IntoIterator<Item = (VertexId, VertexId)>) -> Self {
        self.edges.extend(edges);
        self
    }

    pub fn build(self) -> Result<PropertyGraph, EngineError> {
        let n = self.vertex_count;
        let mut records = Vec::with_capacity(self.edges.len());
        for (id, &(from, to)) in self.edges.iter().enumerate() {
            for v in [from, to] {
                if v >= n {
                    return Err(EngineError::DanglingEndpoint {
                        edge: id,
                        vertex: v,
                        vertex_count: n,
                    });
                }
            }
            if from == to {
                return Err(EngineError::SelfLoop { edge: id, vertex: from });
            }
            records.push(EdgeRecord { id, from, to });
        }

        let mut degree = vec![0usize; n];
        for e in &records {
            degree[e.from] += 1;
            degree[e.to] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adjacency = vec![Incidence { neighbor: 0, edge: 0 }; offsets[n]];
        for e in &records {
            adjacency[fill[e.from]] = Incidence { neighbor: e.to, edge: e.id };
            fill[e.from] += 1;
            adjacency[fill[e.to]] = Incidence { neighbor: e.from, edge: e.id };
            fill[e.to] += 1;
        }
        for v in 0..n {
            let list = &mut adjacency[offsets[v]..offsets[v + 1]];
            list.sort_unstable();
            if !self.allow_parallel {
                if let Some(pair) = list.windows(2).find(|w| w[0].neighbor == w[1].neighbor) {
                    return Err(EngineError::ParallelEdge {
                        edge: pair[0].edge.max(pair[1].edge),
                        from: v.min(pair[0].neighbor),
                        to: v.max(pair[0].neighbor),
                    });
                }
            }
        }

        Ok(PropertyGraph {
            edge_attrs: AttributeTable::new(records.len()),
            vertex_attrs: AttributeTable::new(n),
            edges: records,
            offsets,
            adjacency,
        })
    }
}

/// Convenience wrapper over [`GraphBuilder`] for simple graphs.
pub fn build_graph(
    vertex_count: usize,
    edges: impl IntoIterator<Item = (VertexId, VertexId)>,
) -> Result<PropertyGraph, EngineError> {
    GraphBuilder::new(vertex_count).edges(edges).build()
}
