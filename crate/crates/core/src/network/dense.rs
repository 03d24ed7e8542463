//! Straight-loop dense assembly of Ybus, `B′` and `B″`.
//!
//! Written independently of the graph assembly so the two can be checked
//! against each other; also the matrix source for the Newton-Raphson
//! reference solver.

use num_complex::Complex64;

use super::case::NetworkCase;

pub fn dense_ybus(case: &NetworkCase) -> Vec<Vec<Complex64>> {
    assemble(case, true)
}

fn assemble(case: &NetworkCase, with_shift: bool) -> Vec<Vec<Complex64>> {
    let n = case.buses.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut y = vec![vec![zero; n]; n];
    for br in case.branches.iter().filter(|b| b.in_service) {
        let z = Complex64::new(br.r, br.x);
        let ys = z.inv();
        let half_b = Complex64::new(0.0, 0.5 * br.b);
        let shift = if with_shift { br.shift } else { 0.0 };
        let ratio = Complex64::new(br.tap * shift.cos(), br.tap * shift.sin());
        let (f, t) = (br.from, br.to);
        y[f][f] += (ys + half_b) / (br.tap * br.tap);
        y[t][t] += ys + half_b;
        y[f][t] -= ys / ratio.conj();
        y[t][f] -= ys / ratio;
    }
    for (i, bus) in case.buses.iter().enumerate() {
        y[i][i] += Complex64::new(bus.gs, bus.bs);
    }
    y
}

pub fn dense_b_prime(case: &NetworkCase) -> Vec<Vec<f64>> {
    let n = case.buses.len();
    let mut b = vec![vec![0.0; n]; n];
    for br in case.branches.iter().filter(|b| b.in_service) {
        let s = 1.0 / br.x;
        b[br.from][br.from] += s;
        b[br.to][br.to] += s;
        b[br.from][br.to] -= s;
        b[br.to][br.from] -= s;
    }
    b
}

pub fn dense_b_double_prime(case: &NetworkCase) -> Vec<Vec<f64>> {
    assemble(case, false)
        .into_iter()
        .map(|row| row.into_iter().map(|v| -v.im).collect())
        .collect()
}

/// `S = diag(V)·conj(Y·V)`.
pub fn dense_injections(y: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    y.iter()
        .zip(v)
        .map(|(row, vi)| {
            let current: Complex64 = row.iter().zip(v).map(|(yij, vj)| yij * vj).sum();
            vi * current.conj()
        })
        .collect()
}
