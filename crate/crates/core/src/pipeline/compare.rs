use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::ExecMode;
use crate::network::{NetworkCase, VoltageState};

use super::hybrid::{solve_method, HybridConfig, Method, ProfileOverrides};
use super::newton::{newton_raphson_reference, DEFAULT_NR_MAX_ITERS, DEFAULT_NR_TOL};

const REFERENCE_FALLBACK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: Method,
    pub converged: bool,
    /// BiPR iterations, fast-decoupled outer iterations, or NR iterations.
    pub iterations: usize,
    /// Total DCG inner iterations.
    pub inner_iterations: usize,
    pub millis: f64,
    pub mbpim: f64,
    /// Largest |V| and angle differences from the NR reference.
    pub max_dvm: f64,
    pub max_dva: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub case_name: String,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub exec: ExecMode,
    pub nr_tol: f64,
    /// Applied to every method profile before it runs.
    pub overrides: ProfileOverrides,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            exec: ExecMode::Parallel,
            nr_tol: DEFAULT_NR_TOL,
            overrides: ProfileOverrides::default(),
        }
    }
}

/// Runs each method with its own tolerance profile. Failures are recorded
/// in the row rather than aborting the comparison.
pub fn compare_methods(case: &NetworkCase, methods: &[Method], config: &CompareConfig) -> ComparisonTable {
    // near-zero impedances put a roundoff floor under the NR mismatch
    let reference = newton_raphson_reference(case, config.nr_tol, DEFAULT_NR_MAX_ITERS)
        .or_else(|_| newton_raphson_reference(case, config.nr_tol.max(REFERENCE_FALLBACK_TOL), DEFAULT_NR_MAX_ITERS))
        .ok();
    let rows = methods
        .iter()
        .map(|&method| run_row(case, method, config, reference.as_ref().map(|r| &r.state)))
        .collect();
    ComparisonTable {
        case_name: case.name.clone(),
        rows,
    }
}

fn run_row(case: &NetworkCase, method: Method, config: &CompareConfig, reference: Option<&VoltageState>) -> ComparisonRow {
    let mut profile = HybridConfig::for_method(method).with_exec(config.exec);
    config.overrides.apply(&mut profile);
    let outcome = if method == Method::Nr {
        super::hybrid::nr_report(case, config.nr_tol, DEFAULT_NR_MAX_ITERS)
    } else {
        solve_method(case, method, &profile)
    };
    match outcome {
        Ok(report) => {
            let (dvm, dva) = match reference {
                Some(r) => report.state.max_deviation(r),
                None => (f64::NAN, f64::NAN),
            };
            let iterations = match method {
                Method::Nr => report.stages.first().map_or(0, |s| s.iterations),
                Method::Dcg | Method::VcDcg => report.dcg_outer_iterations,
                _ => report.bipr_iterations,
            };
            ComparisonRow {
                method,
                converged: report.converged,
                iterations,
                inner_iterations: report.dcg_inner_iterations,
                millis: report.total_millis,
                mbpim: report.mbpim,
                max_dvm: dvm,
                max_dva: dva,
                error: None,
            }
        }
        Err(e) => ComparisonRow {
            method,
            converged: false,
            iterations: 0,
            inner_iterations: 0,
            millis: 0.0,
            mbpim: f64::NAN,
            max_dvm: f64::NAN,
            max_dva: f64::NAN,
            error: Some(e.to_string()),
        },
    }
}

impl ComparisonTable {
    pub fn row(&self, method: Method) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn to_csv(&self, timings: bool) -> String {
        let mut s = String::from("method,converged,iterations,inner_iterations,millis,mbpim,max_dvm,max_dva,error\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.3},{:e},{:e},{:e},{}",
                r.method.label(),
                r.converged,
                r.iterations,
                r.inner_iterations,
                if timings { r.millis } else { 0.0 },
                r.mbpim,
                r.max_dvm,
                r.max_dva,
                r.error.as_deref().unwrap_or("").replace(',', ";")
            );
        }
        s
    }

    pub fn to_text(&self, timings: bool) -> String {
        let mut s = format!("case: {}\n", self.case_name);
        let _ = writeln!(
            s,
            "{:<12} {:>9} {:>10} {:>8} {:>10} {:>11} {:>11} {:>11}",
            "method", "converged", "iterations", "inner", "ms", "mbpim", "max_dvm", "max_dva"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:>9} {:>10} {:>8} {:>10.2} {:>11.3e} {:>11.3e} {:>11.3e}",
                r.method.label(),
                r.converged,
                r.iterations,
                r.inner_iterations,
                if timings { r.millis } else { 0.0 },
                r.mbpim,
                r.max_dvm,
                r.max_dva
            );
            if let Some(e) = &r.error {
                let _ = writeln!(s, "{:<12} error: {e}", "");
            }
        }
        s
    }
}
