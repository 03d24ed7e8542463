//! Vertex-centric bulk-synchronous graph engine.

mod accumulate;
mod attributes;
mod graph;
mod pagerank;
mod superstep;

use thiserror::Error;

pub use accumulate::{Accumulator, Max, Min, Sum};
pub use attributes::{AttrKind, AttrValue, AttributeTable, Column, ColumnId};
pub use graph::{build_graph, EdgeId, EdgeRecord, GraphBuilder, Incidence, PropertyGraph, VertexId};
pub use pagerank::{pagerank, PageRank};
pub use superstep::{Engine, ExecMode, RunOutcome, SuperstepProgram, Termination};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("edge {edge} references vertex {vertex}, but the graph has {vertex_count} vertices")]
    DanglingEndpoint {
        edge: EdgeId,
        vertex: VertexId,
        vertex_count: usize,
    },
    #[error("edge {edge} is a self-loop on vertex {vertex}")]
    SelfLoop { edge: EdgeId, vertex: VertexId },
    #[error("edge {edge} duplicates an existing edge between {from} and {to}")]
    ParallelEdge {
        edge: EdgeId,
        from: VertexId,
        to: VertexId,
    },
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("attribute `{0}` is not declared")]
    UndeclaredAttribute(String),
    #[error("attribute `{0}` is already declared")]
    DuplicateAttribute(String),
    #[error("attribute `{name}` is {found}, expected {expected}")]
    AttributeKind {
        name: String,
        expected: AttrKind,
        found: AttrKind,
    },
    #[error("attribute `{name}` has {found} values, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{0}")]
    InvalidParameter(String),
}
