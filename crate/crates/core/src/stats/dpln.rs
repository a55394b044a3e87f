//! Double Pareto lognormal distribution.
//!
//! `X = exp(mu + sigma Z + E1/alpha - E2/beta)` with `Z` standard normal and
//! `E1`, `E2` unit exponentials. The density has a power tail of exponent
//! `-alpha - 1` on the right, `beta - 1` on the left, and a lognormal body.
//!
//! Everything is evaluated in log space so the tails stay finite far beyond
//! where the linear-scale terms under- or overflow.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::special::{log_normal_cdf, log_normal_sf};
use super::StatError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DplnParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl DplnParams {
    pub fn new(alpha: f64, beta: f64, mu: f64, sigma: f64) -> Result<Self, StatError> {
        let p = DplnParams { alpha, beta, mu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), StatError> {
        let ok = self.alpha > 0.0
            && self.beta > 0.0
            && self.sigma > 0.0
            && self.alpha.is_finite()
            && self.beta.is_finite()
            && self.sigma.is_finite()
            && self.mu.is_finite();
        if ok {
            Ok(())
        } else {
            Err(StatError::Domain(format!("invalid DPLN parameters {self:?}")))
        }
    }

    /// `ln E[X^k]`, defined for `-beta < k < alpha`.
    pub fn log_moment(&self, k: f64) -> Option<f64> {
        if k >= self.alpha || k <= -self.beta {
            return None;
        }
        Some(log_moment_factor(self.alpha, self.beta, k) + k * self.mu + 0.5 * k * k * self.sigma * self.sigma)
    }
}

/// `ln(alpha beta / ((alpha - k)(beta + k)))`
fn log_moment_factor(alpha: f64, beta: f64, k: f64) -> f64 {
    alpha.ln() + beta.ln() - (alpha - k).ln() - (beta + k).ln()
}

fn check_x(x: f64) -> Result<(), StatError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(StatError::Domain(format!("DPLN is supported on x > 0, got {x}")))
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn dpln_log_pdf(x: f64, p: &DplnParams) -> Result<f64, StatError> {
    check_x(x)?;
    p.validate()?;
    let DplnParams { alpha, beta, mu, sigma } = *p;
    let s2 = sigma * sigma;
    let lx = x.ln();
    let right =
        -(alpha + 1.0) * lx + alpha * mu + 0.5 * alpha * alpha * s2 + log_normal_cdf((lx - mu - alpha * s2) / sigma);
    let left = (beta - 1.0) * lx - beta * mu + 0.5 * beta * beta * s2 + log_normal_sf((lx - mu + beta * s2) / sigma);
    Ok((alpha * beta / (alpha + beta)).ln() + log_add(right, left))
}

pub fn dpln_pdf(x: f64, p: &DplnParams) -> Result<f64, StatError> {
    dpln_log_pdf(x, p).map(f64::exp)
}

/// Log-scale pieces of the CDF:
/// `F = Phi(z) - e^{a1} + e^{a2}` and `1 - F = Phi^c(z) + e^{a1} - e^{a2}`.
fn cdf_terms(x: f64, p: &DplnParams) -> (f64, f64, f64) {
    let DplnParams { alpha, beta, mu, sigma } = *p;
    let s2 = sigma * sigma;
    let lx = x.ln();
    let z = (lx - mu) / sigma;
    let a1 = (beta / (alpha + beta)).ln() - alpha * lx
        + alpha * mu
        + 0.5 * alpha * alpha * s2
        + log_normal_cdf(z - alpha * sigma);
    let a2 = (alpha / (alpha + beta)).ln() + beta * lx - beta * mu
        + 0.5 * beta * beta * s2
        + log_normal_sf(z + beta * sigma);
    (z, a1, a2)
}

/// `ln(e^{plus1} + e^{plus2} - e^{minus})`
fn log_combine(plus1: f64, plus2: f64, minus: f64) -> f64 {
    let m = plus1.max(plus2).max(minus);
    let v = (plus1 - m).exp() + (plus2 - m).exp() - (minus - m).exp();
    if v > 0.0 {
        m + v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

pub fn dpln_log_cdf(x: f64, p: &DplnParams) -> Result<f64, StatError> {
    check_x(x)?;
    p.validate()?;
    let (z, a1, a2) = cdf_terms(x, p);
    Ok(log_combine(log_normal_cdf(z), a2, a1).min(0.0))
}

/// `ln P(X >= x)`
pub fn dpln_log_sf(x: f64, p: &DplnParams) -> Result<f64, StatError> {
    check_x(x)?;
    p.validate()?;
    let (z, a1, a2) = cdf_terms(x, p);
    Ok(log_combine(log_normal_sf(z), a1, a2).min(0.0))
}

pub fn dpln_cdf(x: f64, p: &DplnParams) -> Result<f64, StatError> {
    if x <= 0.0 && x.is_finite() {
        return Ok(0.0);
    }
    if x.ln() <= p.mu {
        dpln_log_cdf(x, p).map(f64::exp)
    } else {
        dpln_log_sf(x, p).map(|l| 1.0 - l.exp())
    }
}

pub fn dpln_sf(x: f64, p: &DplnParams) -> Result<f64, StatError> {
    if x <= 0.0 && x.is_finite() {
        return Ok(1.0);
    }
    if x.ln() <= p.mu {
        dpln_log_cdf(x, p).map(|l| 1.0 - l.exp())
    } else {
        dpln_log_sf(x, p).map(f64::exp)
    }
}

/// `n` independent draws; a fixed seed reproduces the same sample.
pub fn dpln_sample(p: &DplnParams, n: usize, seed: u64) -> Result<Vec<f64>, StatError> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let e1: f64 = Exp1.sample(&mut rng);
            let e2: f64 = Exp1.sample(&mut rng);
            (p.mu + p.sigma * z + e1 / p.alpha - e2 / p.beta).exp()
        })
        .collect())
}

const MOMENT_START: (f64, f64) = (5.0, 2.0);
const MOMENT_RTOL: f64 = 1e-8;
const MOMENT_MAX_ITER: usize = 200;

/// Method-of-moments fit from the first four raw sample moments.
/// Needs at least 100 positive values.
pub fn fit_dpln_moments(values: &[f64]) -> Result<DplnParams, StatError> {
    if values.len() < 100 {
        return Err(StatError::Domain(format!(
            "moment fit needs at least 100 values, got {}",
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(StatError::Domain(format!("sample value {bad} is not positive")));
    }
    // scale by the mean so x^4 stays representable
    let scale = values.iter().sum::<f64>() / values.len() as f64;
    let mut log_moments = [0.0; 4];
    for (k, slot) in log_moments.iter_mut().enumerate() {
        let m = values.iter().map(|&x| (x / scale).powi(k as i32 + 1)).sum::<f64>() / values.len() as f64;
        *slot = m.ln() + (k + 1) as f64 * scale.ln();
    }
    if log_moments.iter().any(|m| !m.is_finite()) {
        return Err(StatError::InfeasibleMoments("sample moments are not finite".into()));
    }
    fit_dpln_log_moments(log_moments)
}

/// Solves `ln E[X^k] = log_moments[k - 1]` for k = 1..4.
///
/// With `c_k = ln E[X^k] - ln(alpha beta / ((alpha - k)(beta + k)))` the
/// equations read `c_k = k mu + k^2 sigma^2 / 2`, so the k = 1, 2 equations
/// give `mu` and `sigma` and the two remaining ones become
/// `c3 - 3 c2 + 3 c1 = 0` and `c4 - 6 c2 + 8 c1 = 0` in `(alpha, beta)`.
/// Those are solved by damped Newton iteration on `(ln(alpha - 4), ln beta)`,
/// which keeps `alpha > 4` and `beta > 0` throughout.
pub fn fit_dpln_log_moments(log_moments: [f64; 4]) -> Result<DplnParams, StatError> {
    let [l1, l2, l3, l4] = log_moments;
    let d1 = l3 - 3.0 * l2 + 3.0 * l1;
    let d2 = l4 - 6.0 * l2 + 8.0 * l1;

    let g = |a: f64, b: f64, k: f64| log_moment_factor(a, b, k);
    let residual = |a: f64, b: f64| -> [f64; 2] {
        [
            d1 - (g(a, b, 3.0) - 3.0 * g(a, b, 2.0) + 3.0 * g(a, b, 1.0)),
            d2 - (g(a, b, 4.0) - 6.0 * g(a, b, 2.0) + 8.0 * g(a, b, 1.0)),
        ]
    };
    // d g_k / d alpha and d g_k / d beta
    let ga = |a: f64, k: f64| 1.0 / a - 1.0 / (a - k);
    let gb = |b: f64, k: f64| 1.0 / b - 1.0 / (b + k);
    let norm2 = |r: [f64; 2]| r[0] * r[0] + r[1] * r[1];

    let mut u = (MOMENT_START.0 - 4.0).ln();
    let mut v = MOMENT_START.1.ln();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MOMENT_MAX_ITER {
        iterations += 1;
        let (a, b) = (4.0 + u.exp(), v.exp());
        let r = residual(a, b);
        if norm2(r).sqrt() < 1e-14 {
            converged = true;
            break;
        }
        let j11 = -(ga(a, 3.0) - 3.0 * ga(a, 2.0) + 3.0 * ga(a, 1.0)) * (a - 4.0);
        let j12 = -(gb(b, 3.0) - 3.0 * gb(b, 2.0) + 3.0 * gb(b, 1.0)) * b;
        let j21 = -(ga(a, 4.0) - 6.0 * ga(a, 2.0) + 8.0 * ga(a, 1.0)) * (a - 4.0);
        let j22 = -(gb(b, 4.0) - 6.0 * gb(b, 2.0) + 8.0 * gb(b, 1.0)) * b;
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            return Err(StatError::InfeasibleMoments("singular Jacobian".into()));
        }
        let du = -(r[0] * j22 - r[1] * j12) / det;
        let dv = -(j11 * r[1] - j21 * r[0]) / det;

        // backtrack until the residual shrinks
        let f0 = norm2(r);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let (nu, nv) = (u + t * du, v + t * dv);
            let cand = residual(4.0 + nu.exp(), nv.exp());
            if norm2(cand).is_finite() && norm2(cand) < f0 * (1.0 - 1e-4 * t) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(StatError::InfeasibleMoments(format!(
                "no descent direction at alpha={a:.6}, beta={b:.6}"
            )));
        }
        let (step_u, step_v) = (t * du, t * dv);
        u += step_u;
        v += step_v;
        let a_new = 4.0 + u.exp();
        if a_new > 1e8 || v.exp() > 1e8 || v.exp() < 1e-8 || u < -40.0 {
            return Err(StatError::InfeasibleMoments(format!(
                "iterates left the admissible region (alpha={a_new:.4e}, beta={:.4e})",
                v.exp()
            )));
        }
        // relative change in alpha and beta
        let rel_a = (a_new - a).abs() / a;
        let rel_b = step_v.exp_m1().abs();
        if rel_a < MOMENT_RTOL && rel_b < MOMENT_RTOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(StatError::NonConvergence(iterations));
    }

    let (alpha, beta) = (4.0 + u.exp(), v.exp());
    let c1 = l1 - log_moment_factor(alpha, beta, 1.0);
    let c2 = l2 - log_moment_factor(alpha, beta, 2.0);
    let s2 = c2 - 2.0 * c1;
    if !(s2 > 0.0) {
        return Err(StatError::InfeasibleMoments(format!(
            "implied sigma^2 = {s2:.4e} is not positive"
        )));
    }
    let mu = c1 - 0.5 * s2;
    DplnParams::new(alpha, beta, mu, s2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> DplnParams {
        DplnParams::new(3.0, 2.0, 0.5, 0.8).unwrap()
    }

    #[test]
    fn domain_errors() {
        assert!(dpln_pdf(0.0, &p()).is_err());
        assert!(dpln_pdf(-1.0, &p()).is_err());
        assert!(DplnParams::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(DplnParams::new(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn cdf_derivative_is_pdf() {
        let p = p();
        for x in [0.05, 0.3, 1.0, 1.7, 4.0, 25.0, 300.0] {
            let h = x * 1e-5;
            let d = (dpln_cdf(x + h, &p).unwrap() - dpln_cdf(x - h, &p).unwrap()) / (2.0 * h);
            let f = dpln_pdf(x, &p).unwrap();
            assert!((d - f).abs() < 1e-6 * f.max(1e-3), "x={x}: {d} vs {f}");
        }
    }

    #[test]
    fn cdf_and_sf_agree() {
        let p = p();
        for x in [1e-4, 0.2, 1.0, 3.0, 50.0, 1e4] {
            let c = dpln_cdf(x, &p).unwrap();
            let s = dpln_sf(x, &p).unwrap();
            assert!((c + s - 1.0).abs() < 1e-12, "x={x}");
            assert!((dpln_log_sf(x, &p).unwrap().exp() - s).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&c));
        }
        // deep upper tail stays finite and follows x^-alpha
        let l1 = dpln_log_sf(1e8, &p).unwrap();
        let l2 = dpln_log_sf(1e9, &p).unwrap();
        assert!(((l2 - l1) / 10f64.ln() + 3.0).abs() < 1e-6);
    }

    #[test]
    fn sampler_is_seeded() {
        let a = dpln_sample(&p(), 5, 42).unwrap();
        let b = dpln_sample(&p(), 5, 42).unwrap();
        let c = dpln_sample(&p(), 5, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(dpln_sample(&p(), 1, 7).unwrap().len(), 1);
        assert!(a.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn exact_moments_invert() {
        for truth in [
            DplnParams::new(6.0, 3.0, 0.0, 0.5).unwrap(),
            DplnParams::new(4.5, 1.2, -0.3, 0.9).unwrap(),
            DplnParams::new(12.0, 8.0, 1.5, 0.3).unwrap(),
        ] {
            let lm = [1.0, 2.0, 3.0, 4.0].map(|k| truth.log_moment(k).unwrap());
            let got = fit_dpln_log_moments(lm).unwrap();
            assert!((got.alpha - truth.alpha).abs() < 1e-4, "{got:?} vs {truth:?}");
            assert!((got.beta - truth.beta).abs() < 1e-4, "{got:?} vs {truth:?}");
            assert!((got.mu - truth.mu).abs() < 1e-4, "{got:?} vs {truth:?}");
            assert!((got.sigma - truth.sigma).abs() < 1e-4, "{got:?} vs {truth:?}");
        }
    }

    #[test]
    fn small_sample_rejected() {
        assert!(matches!(fit_dpln_moments(&[1.0; 50]), Err(StatError::Domain(_))));
    }
}
