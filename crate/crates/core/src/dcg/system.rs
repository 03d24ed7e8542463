use crate::engine::{PropertyGraph, VertexId};
use crate::error::SolveError;
use crate::network::{Coefficients, DecoupledGraph};

/// A symmetric linear system carried by a graph: `a_ii` on vertices, `a_ij`
/// on edges, restricted to the vertices flagged in `index_set`.
#[derive(Debug, Clone)]
pub struct GraphSystem<'g> {
    graph: &'g PropertyGraph,
    diag: Vec<f64>,
    off: Vec<f64>,
    index_set: Vec<bool>,
    pub b: Vec<f64>,
}

impl<'g> GraphSystem<'g> {
    pub fn new(
        graph: &'g PropertyGraph,
        diag: Vec<f64>,
        off: Vec<f64>,
        index_set: Vec<bool>,
        b: Vec<f64>,
    ) -> Result<Self, SolveError> {
        let n = graph.vertex_count();
        for (len, expected) in [
            (diag.len(), n),
            (index_set.len(), n),
            (b.len(), n),
            (off.len(), graph.edge_count()),
        ] {
            if len != expected {
                return Err(SolveError::Dimension { expected, found: len });
            }
        }
        Ok(Self {
            graph,
            diag,
            off,
            index_set,
            b,
        })
    }

    /// `B′` over non-slack buses or `B″` over PQ buses.
    pub fn from_decoupled(dg: &'g DecoupledGraph, which: Coefficients, b: Vec<f64>) -> Result<Self, SolveError> {
        Self::new(
            dg.graph(),
            dg.diagonal(which).to_vec(),
            dg.off_diagonal(which).to_vec(),
            dg.index_set(which),
            b,
        )
    }

    pub fn graph(&self) -> &PropertyGraph {
        self.graph
    }

    pub fn dimension(&self) -> usize {
        self.index_set.iter().filter(|&&x| x).count()
    }

    pub fn in_set(&self, v: VertexId) -> bool {
        self.index_set[v]
    }

    pub fn index_set(&self) -> &[bool] {
        &self.index_set
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// Rejects systems that are singular by structure: a non-positive
    /// diagonal, or a connected block that is a pure Laplacian (no coupling
    /// out of the index set and no diagonal excess anywhere).
    pub fn check_structure(&self) -> Result<(), SolveError> {
        let n = self.graph.vertex_count();
        for v in (0..n).filter(|&v| self.index_set[v]) {
            if !(self.diag[v] > 0.0) || !self.diag[v].is_finite() {
                return Err(SolveError::SingularStructure(format!(
                    "bus position {v} has diagonal {}",
                    self.diag[v]
                )));
            }
        }
        let mut seen = vec![false; n];
        for start in 0..n {
            if !self.index_set[start] || seen[start] {
                continue;
            }
            let mut grounded = false;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                let mut row = 0.0;
                for inc in self.graph.incident(v) {
                    if self.index_set[inc.neighbor] {
                        row += self.off[inc.edge];
                        if !seen[inc.neighbor] {
                            seen[inc.neighbor] = true;
                            stack.push(inc.neighbor);
                        }
                    } else if self.off[inc.edge] != 0.0 {
                        grounded = true;
                    }
                }
                if (self.diag[v] + row).abs() > 1e-9 * self.diag[v] {
                    grounded = true;
                }
            }
            if !grounded {
                return Err(SolveError::SingularStructure(format!(
                    "block containing bus position {start} has no reference"
                )));
            }
        }
        Ok(())
    }

    /// `A·x` over the index set by straight loops; zero outside it.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.graph.vertex_count())
            .map(|v| {
                if !self.index_set[v] {
                    return 0.0;
                }
                let mut acc = self.diag[v] * x[v];
                for inc in self.graph.incident(v) {
                    if self.index_set[inc.neighbor] {
                        acc += self.off[inc.edge] * x[inc.neighbor];
                    }
                }
                acc
            })
            .collect()
    }

    /// Dense matrix over the index set, rows in increasing vertex order.
    pub fn to_dense(&self) -> (Vec<usize>, Vec<Vec<f64>>) {
        let idx: Vec<usize> = (0..self.graph.vertex_count()).filter(|&v| self.index_set[v]).collect();
        let mut pos = vec![usize::MAX; self.graph.vertex_count()];
        for (k, &v) in idx.iter().enumerate() {
            pos[v] = k;
        }
        let mut a = vec![vec![0.0; idx.len()]; idx.len()];
        for (k, &v) in idx.iter().enumerate() {
            a[k][k] = self.diag[v];
            for inc in self.graph.incident(v) {
                if self.index_set[inc.neighbor] {
                    a[k][pos[inc.neighbor]] += self.off[inc.edge];
                }
            }
        }
        (idx, a)
    }
}
