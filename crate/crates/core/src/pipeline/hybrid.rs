use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bipr::{bilevel_solve, partition_levels, BiprConfig, DEFAULT_TOL_V};
use crate::contraction::{contract_zero_impedance, expand_state, ContractionMap, DEFAULT_Z_THRESHOLD};
use crate::dcg::{fast_decoupled_solve, inner_tolerance, FdConfig};
use crate::engine::{Engine, ExecMode};
use crate::error::SolveError;
use crate::network::{build_decoupled, build_ybus, compute_mismatch_with, NetworkCase, VoltageState};
use crate::trace::{Convergence, IterationTrace, Stage};

use super::newton::{newton_raphson_reference, DEFAULT_NR_MAX_ITERS, DEFAULT_NR_TOL};
use super::report::{ContractionSummary, SolveReport, StageTiming};

/// Stage-switch tolerance on both voltage-change measures.
pub const DEFAULT_SWITCH_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Bipr,
    VcBipr,
    Dcg,
    VcDcg,
    Hybrid,
    Nr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Bipr,
        Method::VcBipr,
        Method::Dcg,
        Method::VcDcg,
        Method::Hybrid,
        Method::Nr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Bipr => "BIPR",
            Method::VcBipr => "VC+BIPR",
            Method::Dcg => "DCG",
            Method::VcDcg => "VC+DCG",
            Method::Hybrid => "VC+BIPR+DCG",
            Method::Nr => "NR",
        }
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Method::Bipr => "bipr",
            Method::VcBipr => "vc-bipr",
            Method::Dcg => "dcg",
            Method::VcDcg => "vc-dcg",
            Method::Hybrid => "hybrid",
            Method::Nr => "nr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.cli_name() == lower || m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub z_threshold: f64,
    pub contract: bool,
    pub warm_start: bool,
    pub dcg: bool,
    pub bipr: BiprConfig,
    pub fd: FdConfig,
    /// Start from this state (on original buses) instead of flat start.
    pub initial_state: Option<VoltageState>,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            z_threshold: DEFAULT_Z_THRESHOLD,
            contract: true,
            warm_start: true,
            dcg: true,
            bipr: BiprConfig {
                tol_vr: DEFAULT_SWITCH_TOL,
                tol_va: DEFAULT_SWITCH_TOL,
                ..BiprConfig::default()
            },
            fd: FdConfig::default(),
            initial_state: None,
        }
    }
}

impl HybridConfig {
    /// Stage flags and tolerances for one of the compared methods. `Nr` has
    /// no pipeline stages and maps to the hybrid defaults.
    pub fn for_method(method: Method) -> Self {
        let standalone = BiprConfig {
            tol_vr: DEFAULT_TOL_V,
            tol_va: DEFAULT_TOL_V,
            ..BiprConfig::default()
        };
        let base = Self::default();
        match method {
            Method::Bipr | Method::VcBipr => Self {
                contract: method == Method::VcBipr,
                dcg: false,
                bipr: standalone,
                ..base
            },
            Method::Dcg | Method::VcDcg => Self {
                contract: method == Method::VcDcg,
                warm_start: false,
                ..base
            },
            Method::Hybrid | Method::Nr => base,
        }
    }

    pub fn with_exec(mut self, exec: ExecMode) -> Self {
        self.bipr.exec = exec;
        self.fd.inner.exec = exec;
        self
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.contract {
            parts.push("VC");
        }
        if self.warm_start {
            parts.push("BIPR");
        }
        if self.dcg {
            parts.push("DCG");
        }
        parts.join("+")
    }
}

/// Optional replacements for profile parameters. Voltage tolerances act on
/// whichever BiPR stage the method runs; `max_iters` bounds both BiPR
/// iterations and fast-decoupled outer iterations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileOverrides {
    pub damping: Option<f64>,
    pub tol_vr: Option<f64>,
    pub tol_va: Option<f64>,
    pub tol_p: Option<f64>,
    pub tol_q: Option<f64>,
    pub z_threshold: Option<f64>,
    pub max_iters: Option<usize>,
}

impl ProfileOverrides {
    pub fn apply(&self, config: &mut HybridConfig) {
        if let Some(d) = self.damping {
            config.bipr.damping = d;
        }
        if let Some(t) = self.tol_vr {
            config.bipr.tol_vr = t;
        }
        if let Some(t) = self.tol_va {
            config.bipr.tol_va = t;
        }
        if self.tol_p.is_some() || self.tol_q.is_some() {
            let tol_p = self.tol_p.unwrap_or(config.fd.tol_p);
            let tol_q = self.tol_q.unwrap_or(config.fd.tol_q);
            config.fd.tol_p = tol_p;
            config.fd.tol_q = tol_q;
            config.fd.inner.tol = inner_tolerance(tol_p, tol_q);
        }
        if let Some(z) = self.z_threshold {
            config.z_threshold = z;
        }
        if let Some(n) = self.max_iters {
            config.bipr.max_iters = n;
            config.fd.max_outer = n;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub source: SolveError,
}

fn at(stage: &'static str) -> impl Fn(SolveError) -> PipelineError {
    move |source| PipelineError { stage, source }
}

/// Each supernode starts from the state of the member that supplied its kind.
fn contract_initial(state: &VoltageState, map: &ContractionMap) -> Result<Vec<Complex64>, SolveError> {
    if state.len() != map.original_count() {
        return Err(SolveError::Dimension {
            expected: map.original_count(),
            found: state.len(),
        });
    }
    Ok(map.kind_provenance.iter().map(|&m| state.v[m]).collect())
}

/// Contraction, bi-level warm start, fast-decoupled finish and expansion,
/// each stage switchable.
pub fn hybrid_solve(case: &NetworkCase, config: &HybridConfig) -> Result<SolveReport, PipelineError> {
    if !config.warm_start && !config.dcg {
        return Err(at("config")(SolveError::InvalidConfig(
            "at least one of the warm-start and dcg stages must be enabled".into(),
        )));
    }
    let total = Instant::now();
    let mut stages = Vec::new();
    let started = Instant::now();
    case.validate().map_err(|e| at("validation")(e.into()))?;
    let (solved_case, map) = if config.contract {
        contract_zero_impedance(case, config.z_threshold).map_err(|e| at("contraction")(e.into()))?
    } else {
        (case.clone(), ContractionMap::identity(case))
    };
    stages.push(StageTiming::new("contraction", 0, started));

    let started = Instant::now();
    let ybus = build_ybus(&solved_case).map_err(|e| at("assembly")(e.into()))?;
    let decoupled = if config.dcg {
        Some(build_decoupled(&solved_case).map_err(|e| at("assembly")(e.into()))?)
    } else {
        None
    };
    stages.push(StageTiming::new("assembly", 0, started));

    let mut state = match &config.initial_state {
        Some(s) => contract_initial(s, &map).map_err(at("initial state"))?,
        None => VoltageState::flat_start(&solved_case).v,
    };
    let mut trace = IterationTrace::default();
    let mut termination = Convergence::Converged;
    let (mut bipr_iterations, mut outer, mut inner) = (0, 0, 0);

    if config.warm_start {
        let started = Instant::now();
        let partition = partition_levels(&ybus);
        let out = bilevel_solve(&ybus, &state, &partition, &config.bipr).map_err(at("bipr"))?;
        state = out.state;
        bipr_iterations = out.iterations;
        termination = out.termination;
        trace.extend(out.trace);
        stages.push(StageTiming::new("bipr", bipr_iterations, started));
    }
    if let Some(decoupled) = &decoupled {
        let started = Instant::now();
        let out = fast_decoupled_solve(&ybus, decoupled, &state, &config.fd).map_err(at("dcg"))?;
        state = out.state;
        outer = out.outer_iterations;
        inner = out.inner_iterations;
        termination = out.termination;
        trace.extend(out.trace);
        stages.push(StageTiming::new("dcg", outer, started));
    }

    let started = Instant::now();
    let engine = Engine::new(config.bipr.exec);
    let mbpim = compute_mismatch_with(&engine, &ybus, &state)
        .map_err(|e| at("mismatch")(e.into()))?
        .mbpim;
    let full = expand_state(&state, &map).map_err(|e| at("expansion")(e.into()))?;
    stages.push(StageTiming::new("expansion", 0, started));

    Ok(SolveReport {
        method: config.label(),
        case_name: case.name.clone(),
        converged: termination.converged(),
        termination,
        mbpim,
        bus_numbers: case.buses.iter().map(|b| b.number).collect(),
        state: VoltageState::new(full),
        trace,
        stages,
        bipr_iterations,
        dcg_outer_iterations: outer,
        dcg_inner_iterations: inner,
        total_millis: total.elapsed().as_secs_f64() * 1e3,
        contraction: ContractionSummary::from_map(&map),
    })
}

/// Runs one of the compared methods with its default tolerance profile.
pub fn solve_method(case: &NetworkCase, method: Method, config: &HybridConfig) -> Result<SolveReport, PipelineError> {
    if method == Method::Nr {
        return nr_report(case, DEFAULT_NR_TOL, DEFAULT_NR_MAX_ITERS);
    }
    let mut report = hybrid_solve(case, config)?;
    report.method = method.label().to_string();
    Ok(report)
}

/// The Newton-Raphson reference wrapped as a report.
pub fn nr_report(case: &NetworkCase, tol: f64, max_iters: usize) -> Result<SolveReport, PipelineError> {
    let total = Instant::now();
    case.validate().map_err(|e| at("validation")(e.into()))?;
    let started = Instant::now();
    let nr = newton_raphson_reference(case, tol, max_iters).map_err(at("nr"))?;
    let stages = vec![StageTiming::new("nr", nr.iterations, started)];
    Ok(SolveReport {
        method: Method::Nr.label().to_string(),
        case_name: case.name.clone(),
        converged: true,
        termination: Convergence::Converged,
        mbpim: nr.mbpim,
        bus_numbers: case.buses.iter().map(|b| b.number).collect(),
        state: nr.state,
        trace: IterationTrace::default(),
        stages,
        bipr_iterations: 0,
        dcg_outer_iterations: 0,
        dcg_inner_iterations: 0,
        total_millis: total.elapsed().as_secs_f64() * 1e3,
        contraction: ContractionSummary::from_map(&ContractionMap::identity(case)),
    })
}

impl SolveReport {
    pub fn stage_iterations(&self, stage: Stage) -> usize {
        match stage {
            Stage::Bipr => self.bipr_iterations,
            Stage::Dcg => self.dcg_outer_iterations,
        }
    }
}
