//! Independent oracles shared by the integration tests. Deliberately naive:
//! dense matrices, plain loops, no code from the library under test.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// `∫_0^∞ g(x) dx` through the substitution `x = e^t`, `t ∈ [lo, hi]`.
pub fn integrate_positive(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    integrate(&|t: f64| g(t.exp()) * t.exp(), lo, hi, tol)
}

/// Random digraph as an edge list over `n` nodes; self-loops allowed.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let p = rng.random_range(0.0..3.0) / n as f64;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if rng.random_bool(p.min(1.0)) {
                edges.push((u, v));
            }
        }
    }
    edges
}

/// Reflexive transitive closure by Floyd–Warshall.
pub fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(u, v) in edges {
        r[u][v] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Component labels numbered in order of each component's least member,
/// where `same(i, j)` decides membership.
pub fn label_by_least(n: usize, same: impl Fn(usize, usize) -> bool) -> Vec<u32> {
    let mut label = vec![u32::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if label[i] == u32::MAX {
            for j in i..n {
                if same(i, j) {
                    label[j] = next;
                }
            }
            next += 1;
        }
    }
    label
}

pub fn strong_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<u32> {
    let r = closure(n, edges);
    label_by_least(n, |i, j| r[i][j] && r[j][i])
}

pub fn weak_oracle(n: usize, edges: &[(usize, usize)]) -> Vec<u32> {
    let both: Vec<(usize, usize)> = edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
    let r = closure(n, &both);
    label_by_least(n, |i, j| r[i][j])
}

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
