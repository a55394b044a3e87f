//! Exponential and lognormal fits on the tail `[xmin, inf)`.

use std::f64::consts::PI;

use super::optimize::nelder_mead;
use super::special::log_normal_sf;
use super::{FitResult, Params, StatError, TailSample};

pub(crate) fn lognormal_log_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x.ln() - mu) / sigma;
    -x.ln() - sigma.ln() - 0.5 * (2.0 * PI).ln() - 0.5 * z * z
}

/// Shifted exponential `lambda * exp(-lambda (x - xmin))`, closed form.
pub fn fit_exponential_mle(sample: &TailSample) -> Result<FitResult, StatError> {
    if sample.n_tail() < 2 {
        return Err(StatError::DegenerateSample(
            "exponential fit needs two tail values".into(),
        ));
    }
    let mean = sample.values().iter().sum::<f64>() / sample.n_tail() as f64;
    let excess = mean - sample.xmin();
    if !(excess > 0.0) {
        return Err(StatError::DegenerateSample("every tail value equals xmin".into()));
    }
    FitResult::evaluate(Params::Exponential { lambda: 1.0 / excess }, sample)
}

/// Lognormal truncated below at `xmin`, fit by maximizing the truncated
/// likelihood over `(mu, ln sigma)`. The untruncated estimate (mean and
/// standard deviation of the logs) is the starting point.
pub fn fit_lognormal_mle(sample: &TailSample) -> Result<FitResult, StatError> {
    if sample.n_tail() < 2 || !sample.has_two_distinct() {
        return Err(StatError::DegenerateSample(
            "lognormal fit needs two distinct tail values".into(),
        ));
    }
    let n = sample.n_tail() as f64;
    let logs: Vec<f64> = sample.values().iter().map(|x| x.ln()).collect();
    let s1: f64 = logs.iter().sum();
    let s2: f64 = logs.iter().map(|l| l * l).sum();
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    let ln_xmin = sample.xmin().ln();

    // negative truncated log-likelihood without the constant sum(-ln x) term
    let nll = |[mu, ln_sigma]: [f64; 2]| {
        let sigma = ln_sigma.exp();
        let ss = s2 - 2.0 * mu * s1 + n * mu * mu;
        n * ln_sigma + 0.5 * ss / (sigma * sigma) + n * log_normal_sf((ln_xmin - mu) / sigma)
    };

    let start = [mean, 0.5 * var.max(1e-12).ln()];
    let best = nelder_mead(nll, start, [0.1 + 0.1 * mean.abs(), 0.1], 1e-12, 4000);
    let [mu, ln_sigma] = best.point;
    let sigma = ln_sigma.exp();
    if !(sigma > 1e-8) || !mu.is_finite() {
        return Err(StatError::DegenerateSample(format!(
            "lognormal sigma collapsed to {sigma}"
        )));
    }
    FitResult::evaluate(Params::Lognormal { mu, sigma }, sample)
}
