//! Discrete power law `P(X = x) = x^-alpha / zeta(alpha, xmin)`, its
//! maximum-likelihood fit and the KS-based choice of `xmin`.

use serde::{Deserialize, Serialize};

use super::optimize::golden_max;
use super::special::hurwitz_zeta;
use super::{FitResult, Params, StatError, TailSample};

/// Search interval for the exponent.
pub const ALPHA_MIN: f64 = 1.0 + 1e-6;
pub const ALPHA_MAX: f64 = 20.0;
const ALPHA_TOL: f64 = 1e-9;

/// Candidates leaving fewer tail values than this are skipped unless
/// nothing else is feasible.
pub const MIN_TAIL: usize = 50;

pub fn zeta_pmf(x: u64, alpha: f64, xmin: u64) -> Result<f64, StatError> {
    if xmin == 0 || x < xmin {
        return Err(StatError::Domain(format!(
            "zeta pmf needs 1 <= xmin <= x, got x={x} xmin={xmin}"
        )));
    }
    Ok((x as f64).powf(-alpha) / hurwitz_zeta(alpha, xmin as f64)?)
}

fn zeta_log_likelihood(alpha: f64, n: f64, sum_ln: f64, xmin: f64) -> f64 {
    match hurwitz_zeta(alpha, xmin) {
        Ok(z) => -alpha * sum_ln - n * z.ln(),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Exponent maximizing the tail likelihood, given `n` and `sum(ln x)`.
fn mle_alpha(n: f64, sum_ln: f64, xmin: f64) -> f64 {
    golden_max(
        |a| zeta_log_likelihood(a, n, sum_ln, xmin),
        ALPHA_MIN,
        ALPHA_MAX,
        ALPHA_TOL,
    )
}

fn check_integral(sample: &TailSample) -> Result<(), StatError> {
    match sample.values().iter().find(|v| v.fract() != 0.0) {
        Some(bad) => Err(StatError::Domain(format!("zeta needs integer values, got {bad}"))),
        None => Ok(()),
    }
}

pub fn fit_zeta_mle(sample: &TailSample) -> Result<FitResult, StatError> {
    check_integral(sample)?;
    if sample.n_tail() < 2 || !sample.has_two_distinct() {
        return Err(StatError::DegenerateSample(
            "zeta likelihood is unbounded when all tail values are equal".into(),
        ));
    }
    let sum_ln: f64 = sample.values().iter().map(|x| x.ln()).sum();
    let alpha = mle_alpha(sample.n_tail() as f64, sum_ln, sample.xmin());
    FitResult::evaluate(Params::Zeta { alpha }, sample)
}

/// Largest gap between the empirical and fitted `P(X >= x)`, taken over the
/// distinct tail values.
pub fn ks_distance_zeta(sample: &TailSample, alpha: f64) -> Result<f64, StatError> {
    check_integral(sample)?;
    let values = sample.values();
    let norm = hurwitz_zeta(alpha, sample.xmin())?;
    let n = values.len() as f64;
    let mut worst = 0.0f64;
    let mut i = 0;
    while i < values.len() {
        let x = values[i];
        let empirical = (values.len() - i) as f64 / n;
        let model = hurwitz_zeta(alpha, x)? / norm;
        worst = worst.max((empirical - model).abs());
        while i < values.len() && values[i] == x {
            i += 1;
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XminEstimate {
    pub xmin: u64,
    pub alpha: f64,
    pub ks_distance: f64,
    pub n_tail: usize,
}

/// Scans candidate `xmin` values (the distinct positive degrees), fits the
/// zeta exponent on each tail and keeps the candidate with the smallest KS
/// distance; ties go to the smaller `xmin`. Zeros are ignored.
pub fn estimate_xmin(degrees: &[u64]) -> Result<XminEstimate, StatError> {
    let mut sorted: Vec<u64> = degrees.iter().copied().filter(|&d| d > 0).collect();
    sorted.sort_unstable();
    let mut distinct: Vec<(u64, usize)> = Vec::new();
    for (i, &d) in sorted.iter().enumerate() {
        if distinct.last().is_none_or(|&(v, _)| v != d) {
            distinct.push((d, i));
        }
    }
    if distinct.len() < 2 {
        return Err(StatError::DegenerateSample(
            "need at least two distinct positive values to choose xmin".into(),
        ));
    }
    // a tail needs two distinct values for a finite exponent
    let feasible = &distinct[..distinct.len() - 1];
    let mut candidates: Vec<(u64, usize)> = feasible
        .iter()
        .copied()
        .filter(|&(_, start)| sorted.len() - start >= MIN_TAIL)
        .collect();
    if candidates.is_empty() {
        candidates = feasible.to_vec();
    }

    // suffix sums of ln x
    let mut suffix_ln = vec![0.0; sorted.len() + 1];
    for i in (0..sorted.len()).rev() {
        suffix_ln[i] = suffix_ln[i + 1] + (sorted[i] as f64).ln();
    }
    let all: Vec<f64> = sorted.iter().map(|&d| d as f64).collect();

    let mut best: Option<XminEstimate> = None;
    for (xmin, start) in candidates {
        let n = sorted.len() - start;
        let alpha = mle_alpha(n as f64, suffix_ln[start], xmin as f64);
        let tail = TailSample {
            values: all[start..].to_vec(),
            xmin: xmin as f64,
        };
        let ks = ks_distance_zeta(&tail, alpha)?;
        if best.is_none_or(|b| ks < b.ks_distance) {
            best = Some(XminEstimate {
                xmin,
                alpha,
                ks_distance: ks,
                n_tail: n,
            });
        }
    }
    Ok(best.expect("at least one feasible candidate"))
}
