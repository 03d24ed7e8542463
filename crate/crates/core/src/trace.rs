use std::io::{self, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Bipr,
    Dcg,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Bipr => "bipr",
            Stage::Dcg => "dcg",
        }
    }
}

/// How an iterative solve ended when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Converged,
    BudgetExhausted,
}

impl Convergence {
    pub fn converged(self) -> bool {
        self == Convergence::Converged
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Convergence::Converged => "converged",
            Convergence::BudgetExhausted => "budget exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub stage: Stage,
    /// Largest change of `Re V` over the iteration.
    pub d_vr: f64,
    /// Largest change of `Im V` over the iteration.
    pub d_va: f64,
    pub d_p: f64,
    pub d_q: f64,
    pub mbpim: f64,
    /// Wall time since the stage started.
    pub millis: f64,
    /// Cumulative inner linear-solver iterations (`dcg` rows only).
    pub inner_iterations: Option<usize>,
    /// Residual norm of the last inner solve (`dcg` rows only).
    pub inner_residual: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: IterationTrace) {
        self.records.extend(other.records);
    }

    pub fn stage_len(&self, stage: Stage) -> usize {
        self.records.iter().filter(|r| r.stage == stage).count()
    }

    /// Writes the CSV trace. With `timings == false` the `millis` column is
    /// zero so that output is reproducible.
    pub fn write_csv<W: Write>(&self, out: &mut W, timings: bool) -> io::Result<()> {
        writeln!(out, "iteration,stage,d_vr,d_va,d_p,d_q,mbpim,millis,inner_iters,inner_residual")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e},{:e},{:.3},{},{}",
                r.iteration,
                r.stage.as_str(),
                r.d_vr,
                r.d_va,
                r.d_p,
                r.d_q,
                r.mbpim,
                if timings { r.millis } else { 0.0 },
                r.inner_iterations.map(|n| n.to_string()).unwrap_or_default(),
                r.inner_residual.map(|x| format!("{x:e}")).unwrap_or_default(),
            )?;
        }
        Ok(())
    }
}
