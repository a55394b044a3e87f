//! Small derivative-free optimizers used by the maximum-likelihood fitters.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximizer of a unimodal `f` on `[lo, hi]`.
/// Stops once the bracket is narrower than `tol`.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    // the endpoints themselves are candidates when the optimum sits on the boundary
    [lo, mid, hi]
        .into_iter()
        .map(|x| (x, f(x)))
        .fold((mid, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
        .0
}

pub(crate) struct Simplex {
    pub point: [f64; 2],
    pub value: f64,
    pub iterations: usize,
}

/// Nelder-Mead minimization in two dimensions. Non-finite objective values
/// are treated as `+inf`. Restarts once from the best vertex so a collapsed
/// simplex does not stop early.
pub(crate) fn nelder_mead<F: FnMut([f64; 2]) -> f64>(
    mut f: F,
    start: [f64; 2],
    step: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> Simplex {
    let mut eval = |p: [f64; 2]| {
        let v = f(p);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut best = run_simplex(&mut eval, start, step, tol, max_iter);
    let again = run_simplex(&mut eval, best.point, step, tol, max_iter);
    if again.value <= best.value {
        best = Simplex {
            iterations: best.iterations + again.iterations,
            ..again
        };
    }
    best
}

fn run_simplex<F: FnMut([f64; 2]) -> f64>(
    f: &mut F,
    start: [f64; 2],
    step: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> Simplex {
    let mut pts = [start, [start[0] + step[0], start[1]], [start[0], start[1] + step[1]]];
    let mut vals = [f(pts[0]), f(pts[1]), f(pts[2])];
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.map(|i| pts[i]);
        vals = order.map(|i| vals[i]);

        let spread = (vals[2] - vals[0]).abs();
        let size = pts[1..]
            .iter()
            .map(|p| (p[0] - pts[0][0]).abs().max((p[1] - pts[0][1]).abs()))
            .fold(0.0, f64::max);
        if spread <= tol * (1.0 + vals[0].abs()) && size <= tol {
            break;
        }

        let centroid = lerp(pts[0], pts[1], 0.5);
        let reflected = lerp(centroid, pts[2], -1.0);
        let fr = f(reflected);
        if fr < vals[0] {
            let expanded = lerp(centroid, pts[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
        } else {
            let (contracted, fc) = if fr < vals[2] {
                let c = lerp(centroid, reflected, 0.5);
                (c, f(c))
            } else {
                let c = lerp(centroid, pts[2], 0.5);
                (c, f(c))
            };
            if fc < vals[2].min(fr) {
                pts[2] = contracted;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    pts[i] = lerp(pts[0], pts[i], 0.5);
                    vals[i] = f(pts[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Simplex {
        point: pts[best],
        value: vals[best],
        iterations: iter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_interior_and_boundary() {
        let x = golden_max(|x| -(x - 2.3).powi(2), 0.0, 10.0, 1e-9);
        assert!((x - 2.3).abs() < 1e-8);
        let x = golden_max(|x| -x, 1.0, 5.0, 1e-9);
        assert_eq!(x, 1.0);
    }

    #[test]
    fn simplex_rosenbrock() {
        let r = nelder_mead(
            |[x, y]| (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2),
            [-1.2, 1.0],
            [0.5, 0.5],
            1e-12,
            5000,
        );
        assert!((r.point[0] - 1.0).abs() < 1e-5, "{:?}", r.point);
        assert!((r.point[1] - 1.0).abs() < 1e-5);
    }
}
