use std::fmt::Write as _;
use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::contraction::ContractionMap;
use crate::network::VoltageState;
use crate::trace::{Convergence, IterationTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub name: String,
    pub iterations: usize,
    pub millis: f64,
}

impl StageTiming {
    pub(crate) fn new(name: &str, iterations: usize, started: Instant) -> Self {
        Self {
            name: name.to_string(),
            iterations,
            millis: started.elapsed().as_secs_f64() * 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSummary {
    pub original_buses: usize,
    pub supernodes: usize,
    pub branches_removed: usize,
    pub warnings: Vec<String>,
}

impl ContractionSummary {
    pub fn from_map(map: &ContractionMap) -> Self {
        Self {
            original_buses: map.original_count(),
            supernodes: map.supernode_count(),
            branches_removed: map.contracted_branches.len(),
            warnings: map.warnings.iter().map(|w| w.to_string()).collect(),
        }
    }
}

/// Outcome of one solve, with voltages on the original bus numbering.
/// Flows across contracted branches are not computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub case_name: String,
    pub converged: bool,
    pub termination: Convergence,
    /// Measured on the model that was solved (the contracted one when
    /// contraction ran).
    pub mbpim: f64,
    pub bus_numbers: Vec<u32>,
    pub state: VoltageState,
    pub trace: IterationTrace,
    pub stages: Vec<StageTiming>,
    pub bipr_iterations: usize,
    pub dcg_outer_iterations: usize,
    pub dcg_inner_iterations: usize,
    pub total_millis: f64,
    pub contraction: ContractionSummary,
}

impl SolveReport {
    /// Zeroes every wall-clock field so the report is reproducible.
    pub fn strip_timings(&mut self) {
        self.total_millis = 0.0;
        for s in &mut self.stages {
            s.millis = 0.0;
        }
        for r in &mut self.trace.records {
            r.millis = 0.0;
        }
    }

    /// Key/value header followed by a bus table:
    ///
    /// ```text
    /// method: VC+BIPR+DCG
    /// ...
    /// stage.<name>: iterations=<n> ms=<t>
    /// warning: <text>
    ///
    /// bus,vm,va_rad
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "method: {}", self.method);
        let _ = writeln!(s, "case: {}", self.case_name);
        let _ = writeln!(s, "converged: {}", self.converged);
        let _ = writeln!(s, "termination: {}", self.termination.as_str());
        let _ = writeln!(s, "mbpim: {:.6e}", self.mbpim);
        let _ = writeln!(s, "buses: {}", self.contraction.original_buses);
        let _ = writeln!(s, "supernodes: {}", self.contraction.supernodes);
        let _ = writeln!(s, "branches_removed: {}", self.contraction.branches_removed);
        let _ = writeln!(s, "bipr_iterations: {}", self.bipr_iterations);
        let _ = writeln!(s, "dcg_outer_iterations: {}", self.dcg_outer_iterations);
        let _ = writeln!(s, "dcg_inner_iterations: {}", self.dcg_inner_iterations);
        let _ = writeln!(s, "total_ms: {:.3}", self.total_millis);
        for st in &self.stages {
            let _ = writeln!(s, "stage.{}: iterations={} ms={:.3}", st.name, st.iterations, st.millis);
        }
        for w in &self.contraction.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "bus,vm,va_rad");
        for (num, v) in self.bus_numbers.iter().zip(&self.state.v) {
            let _ = writeln!(s, "{num},{:.10},{:.10}", v.norm(), v.arg());
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn write_trace_csv<W: Write>(&self, out: &mut W, timings: bool) -> io::Result<()> {
        self.trace.write_csv(out, timings)
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        format!(
            "{} on {}: converged={} mbpim={:.3e} bipr_iterations={} dcg_outer={} dcg_inner={} supernodes={}/{} time={:.2}ms",
            self.method,
            self.case_name,
            self.converged,
            self.mbpim,
            self.bipr_iterations,
            self.dcg_outer_iterations,
            self.dcg_inner_iterations,
            self.contraction.supernodes,
            self.contraction.original_buses,
            self.total_millis
        )
    }
}
