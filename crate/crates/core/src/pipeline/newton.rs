//! Dense polar Newton-Raphson, used as the reference solution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::SolveError;
use crate::network::dense::{dense_injections, dense_ybus};
use crate::network::{BusKind, NetworkCase, VoltageState};

pub const DEFAULT_NR_TOL: f64 = 1e-8;
pub const DEFAULT_NR_MAX_ITERS: usize = 30;

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub state: VoltageState,
    pub iterations: usize,
    pub mbpim: f64,
}

fn max_mismatch(case: &NetworkCase, s: &[Complex64]) -> (Vec<f64>, Vec<f64>, f64) {
    let mut dp = vec![0.0; s.len()];
    let mut dq = vec![0.0; s.len()];
    let mut worst = 0.0f64;
    for (i, bus) in case.buses.iter().enumerate() {
        let spec = bus.injection();
        if bus.kind != BusKind::Slack {
            dp[i] = spec.re - s[i].re;
            worst = worst.max(dp[i].abs());
        }
        if bus.kind == BusKind::Pq {
            dq[i] = spec.im - s[i].im;
            worst = worst.max(dq[i].abs());
        }
        if dp[i].is_nan() || dq[i].is_nan() {
            worst = f64::NAN;
        }
    }
    (dp, dq, worst)
}

/// Solves from flat start until the largest injection mismatch is below `tol`.
pub fn newton_raphson_reference(
    case: &NetworkCase,
    tol: f64,
    max_iters: usize,
) -> Result<NewtonResult, SolveError> {
    newton_raphson_from(case, &VoltageState::flat_start(case), tol, max_iters)
}

pub fn newton_raphson_from(
    case: &NetworkCase,
    start: &VoltageState,
    tol: f64,
    max_iters: usize,
) -> Result<NewtonResult, SolveError> {
    if !(tol > 0.0) {
        return Err(SolveError::InvalidConfig(format!("tolerance {tol} must be positive")));
    }
    let n = case.bus_count();
    if start.len() != n {
        return Err(SolveError::Dimension {
            expected: n,
            found: start.len(),
        });
    }
    case.slack()?;
    let y = dense_ybus(case);
    let g = |i: usize, j: usize| y[i][j].re;
    let b = |i: usize, j: usize| y[i][j].im;

    let angle_vars: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind != BusKind::Slack).collect();
    let mag_vars: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind == BusKind::Pq).collect();
    let (na, nm) = (angle_vars.len(), mag_vars.len());

    let mut vm = start.magnitudes();
    let mut va = start.angles();
    let mut initial = None;
    for k in 0.. {
        let v: Vec<Complex64> = vm.iter().zip(&va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
        let s = dense_injections(&y, &v);
        let (dp, dq, worst) = max_mismatch(case, &s);
        if worst.is_nan() {
            return Err(SolveError::NonFinite { iteration: k });
        }
        let base = *initial.get_or_insert(worst);
        if base > 0.0 && worst > 1e3 * base {
            return Err(SolveError::Divergence {
                iteration: k,
                residual: worst,
                initial: base,
            });
        }
        if worst < tol {
            return Ok(NewtonResult {
                state: VoltageState::new(v),
                iterations: k,
                mbpim: worst,
            });
        }
        if k == max_iters {
            return Err(SolveError::NoConvergence {
                iterations: k,
                residual: worst,
            });
        }

        let mut jac = DMatrix::<f64>::zeros(na + nm, na + nm);
        let (p, q): (Vec<f64>, Vec<f64>) = s.iter().map(|x| (x.re, x.im)).unzip();
        // rows: P at angle_vars, Q at mag_vars; columns: θ at angle_vars, |V| at mag_vars
        let rows = angle_vars.iter().map(|&i| (i, true)).chain(mag_vars.iter().map(|&i| (i, false)));
        for (r, (i, is_p)) in rows.enumerate() {
            let cols = angle_vars.iter().map(|&j| (j, true)).chain(mag_vars.iter().map(|&j| (j, false)));
            for (c, (j, is_angle)) in cols.enumerate() {
                jac[(r, c)] = if i == j {
                    match (is_p, is_angle) {
                        (true, true) => -q[i] - b(i, i) * vm[i] * vm[i],
                        (true, false) => p[i] / vm[i] + g(i, i) * vm[i],
                        (false, true) => p[i] - g(i, i) * vm[i] * vm[i],
                        (false, false) => q[i] / vm[i] - b(i, i) * vm[i],
                    }
                } else {
                    let t = va[i] - va[j];
                    let (sn, cs) = t.sin_cos();
                    match (is_p, is_angle) {
                        (true, true) => vm[i] * vm[j] * (g(i, j) * sn - b(i, j) * cs),
                        (true, false) => vm[i] * (g(i, j) * cs + b(i, j) * sn),
                        (false, true) => -vm[i] * vm[j] * (g(i, j) * cs + b(i, j) * sn),
                        (false, false) => vm[i] * (g(i, j) * sn - b(i, j) * cs),
                    }
                };
            }
        }
        let rhs = DVector::from_iterator(
            na + nm,
            angle_vars.iter().map(|&i| dp[i]).chain(mag_vars.iter().map(|&i| dq[i])),
        );
        let dx = jac
            .lu()
            .solve(&rhs)
            .filter(|dx| dx.iter().all(|x| x.is_finite()))
            .ok_or(SolveError::SingularJacobian { iteration: k + 1 })?;
        for (c, &i) in angle_vars.iter().enumerate() {
            va[i] += dx[c];
        }
        for (c, &i) in mag_vars.iter().enumerate() {
            vm[i] += dx[na + c];
        }
    }
    unreachable!("loop returns")
}
