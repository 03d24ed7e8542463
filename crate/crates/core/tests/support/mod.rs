//! Independent reference computations for the test suites.
#![allow(dead_code)]

use gridgraph_core::engine::{build_graph, PropertyGraph};
use gridgraph_core::network::{Branch, Bus, BusKind, NetworkCase};
use gridgraph_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian elimination with partial pivoting.
pub fn gaussian_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// `A·p` as the listing forms it: off-diagonal terms gathered in column
/// order, then the diagonal term added.
pub fn listing_matvec(a: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            let off = (0..p.len()).filter(|&j| j != i).fold(0.0, |acc, j| acc + a[i][j] * p[j]);
            a[i][i] * p[i] + off
        })
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (p, q)| acc + p * q)
}

#[derive(Debug, Clone, Copy)]
pub struct ListingStep {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub residual: f64,
    pub x_error_energy: f64,
}

/// Sequential dense preconditioned CG, written straight from the textbook
/// recurrences. `x_star` (if given) is used to record the A-norm error.
pub fn dense_pcg(
    a: &[Vec<f64>],
    b: &[f64],
    diagonal: bool,
    tol: f64,
    max_iters: usize,
    x_star: Option<&[f64]>,
) -> (Vec<f64>, Vec<ListingStep>) {
    let n = b.len();
    let m = |r: &[f64]| -> Vec<f64> {
        if diagonal {
            r.iter().enumerate().map(|(i, ri)| ri / a[i][i]).collect()
        } else {
            r.to_vec()
        }
    };
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = m(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut steps = Vec::new();
    let mut beta = None;
    let energy = |x: &[f64]| -> f64 {
        x_star.map_or(0.0, |xs| {
            let e: Vec<f64> = x.iter().zip(xs).map(|(p, q)| p - q).collect();
            dot(&e, &matvec(a, &e)).sqrt()
        })
    };
    while dot(&r, &r).sqrt() > tol && steps.len() < max_iters {
        let ap = listing_matvec(a, &p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        steps.push(ListingStep {
            alpha,
            beta,
            residual: dot(&r, &r).sqrt(),
            x_error_energy: energy(&x),
        });
        z = m(&r);
        let rz_new = dot(&r, &z);
        let b_k = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + b_k * p[i];
        }
        beta = Some(b_k);
    }
    (x, steps)
}

/// Symmetric, strictly diagonally dominant system on a random connected
/// graph. `spread` scales the diagonal over `[1, spread]`.
pub struct RandomSpd {
    pub graph: PropertyGraph,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub b: Vec<f64>,
}

pub fn random_spd(seed: u64, n: usize, spread: f64) -> RandomSpd {
    let mut rng = rng(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for _ in 0..n {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j && !edges.contains(&(i.min(j), i.max(j))) {
            edges.push((i.min(j), i.max(j)));
        }
    }
    let graph = build_graph(n, edges.iter().copied()).unwrap();
    let off: Vec<f64> = (0..graph.edge_count()).map(|_| -rng.random_range(0.1..1.0)).collect();
    let scale: Vec<f64> = (0..n).map(|_| spread.powf(rng.random_range(0.0..1.0))).collect();
    let mut diag = vec![0.0; n];
    for e in graph.edges() {
        diag[e.from] += off[e.id].abs();
        diag[e.to] += off[e.id].abs();
    }
    for v in 0..n {
        diag[v] = (diag[v] + rng.random_range(0.05..0.5)) * scale[v];
    }
    let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    RandomSpd { graph, diag, off, b }
}

impl RandomSpd {
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.diag.len();
        let mut a = vec![vec![0.0; n]; n];
        for v in 0..n {
            a[v][v] = self.diag[v];
        }
        for e in self.graph.edges() {
            a[e.from][e.to] += self.off[e.id];
            a[e.to][e.from] += self.off[e.id];
        }
        a
    }
}

/// PageRank by dense power iteration on the column-stochastic link matrix.
pub fn power_iteration_pagerank(n: usize, edges: &[(usize, usize)], d: f64) -> Vec<f64> {
    let mut deg = vec![0usize; n];
    let mut link = vec![vec![0.0; n]; n];
    for &(i, j) in edges {
        deg[i] += 1;
        deg[j] += 1;
    }
    for &(i, j) in edges {
        link[i][j] += 1.0 / deg[j] as f64;
        link[j][i] += 1.0 / deg[i] as f64;
    }
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let next: Vec<f64> = (0..n)
            .map(|i| (1.0 - d) / n as f64 + d * (0..n).map(|j| link[i][j] * r[j]).sum::<f64>())
            .collect();
        let change = next.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r = next;
        if change < 1e-15 {
            break;
        }
    }
    r
}

/// Component label (smallest member) of every vertex, by breadth-first search.
pub fn components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut label = vec![usize::MAX; n];
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([s]);
        label[s] = s;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if label[w] == usize::MAX {
                    label[w] = s;
                    queue.push_back(w);
                }
            }
        }
    }
    label
}

/// Power balance of a slack(1∠0) + PQ bus pair over a lossless line of
/// reactance `x`, solved by repeated grid refinement of `(|V|, θ)`.
pub fn two_bus_grid_search(x: f64, pd: f64, qd: f64) -> (f64, f64) {
    let residual = |vm: f64, va: f64| {
        // injection at bus 2: S = V conj(Y (V - 1)) with Y = 1/(jx)
        let v = Complex64::from_polar(vm, va);
        let y = Complex64::new(0.0, -1.0 / x);
        let s = v * (y * (v - Complex64::new(1.0, 0.0))).conj();
        ((s.re + pd).powi(2) + (s.im + qd).powi(2)).sqrt()
    };
    let (mut vm, mut va) = (1.0, 0.0);
    let (mut hv, mut ha) = (0.5, 1.0);
    for _ in 0..200 {
        let mut best = (residual(vm, va), vm, va);
        for i in -10..=10 {
            for j in -10..=10 {
                let (m, a) = (vm + hv * i as f64 / 10.0, va + ha * j as f64 / 10.0);
                if m > 0.5 {
                    let r = residual(m, a);
                    if r < best.0 {
                        best = (r, m, a);
                    }
                }
            }
        }
        vm = best.1;
        va = best.2;
        hv *= 0.5;
        ha *= 0.5;
    }
    (vm, va)
}

/// Connected random network. With `extras`, branches get resistance,
/// charging, taps and phase shifts and buses get shunts.
pub fn random_case(seed: u64, n: usize, extras: bool) -> NetworkCase {
    let mut rng = rng(seed);
    let mut buses = Vec::with_capacity(n);
    for i in 0..n {
        let kind = if i == 0 {
            BusKind::Slack
        } else if rng.random_bool(0.25) {
            BusKind::Pv
        } else {
            BusKind::Pq
        };
        let mut bus = Bus::new(i as u32 + 1, kind);
        bus.pd = rng.random_range(0.0..0.3);
        bus.qd = rng.random_range(0.0..0.1);
        if kind == BusKind::Pv {
            bus.pg = rng.random_range(0.0..0.4);
            bus.vm_setpoint = Some(rng.random_range(0.98..1.05));
        }
        if extras && rng.random_bool(0.3) {
            bus.gs = rng.random_range(0.0..0.05);
            bus.bs = rng.random_range(-0.1..0.2);
        }
        buses.push(bus);
    }
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..n / 2 {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            pairs.push((i, j));
        }
    }
    let branches = pairs
        .into_iter()
        .map(|(f, t)| {
            let x = rng.random_range(0.02..0.3);
            let mut br = Branch::line(f, t, 0.0, x, 0.0);
            if extras {
                br.r = rng.random_range(0.0..0.1);
                br.b = rng.random_range(0.0..0.2);
                if rng.random_bool(0.3) {
                    br.tap = rng.random_range(0.9..1.1);
                }
                if rng.random_bool(0.2) {
                    br.shift = rng.random_range(-0.2..0.2);
                }
            }
            br
        })
        .collect();
    NetworkCase {
        name: format!("random{seed}"),
        base_mva: 100.0,
        buses,
        branches,
    }
}

/// MATPOWER-convention Ybus by direct entry-by-entry summation.
pub fn reference_ybus(case: &NetworkCase) -> Vec<Vec<Complex64>> {
    let n = case.bus_count();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for br in case.branches.iter().filter(|b| b.in_service) {
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let a = Complex64::from_polar(br.tap, br.shift);
        let ytt = ys + Complex64::new(0.0, br.b / 2.0);
        y[br.from][br.from] += ytt / (a * a.conj());
        y[br.to][br.to] += ytt;
        y[br.from][br.to] += -ys / a.conj();
        y[br.to][br.from] += -ys / a;
    }
    for (i, bus) in case.buses.iter().enumerate() {
        y[i][i] += Complex64::new(bus.gs, bus.bs);
    }
    y
}

/// `B′` from `1/x` and `B″ = −Im(Ybus)` with phase shifts ignored.
pub fn reference_decoupled(case: &NetworkCase) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = case.bus_count();
    let mut bp = vec![vec![0.0; n]; n];
    for br in case.branches.iter().filter(|b| b.in_service) {
        let s = 1.0 / br.x;
        bp[br.from][br.from] += s;
        bp[br.to][br.to] += s;
        bp[br.from][br.to] -= s;
        bp[br.to][br.from] -= s;
    }
    let mut unshifted = case.clone();
    for br in &mut unshifted.branches {
        br.shift = 0.0;
    }
    let bpp = reference_ybus(&unshifted)
        .into_iter()
        .map(|row| row.into_iter().map(|v| -v.im).collect())
        .collect();
    (bp, bpp)
}

pub fn max_abs_diff_c(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}
