//! Candidate degree distributions: exponential, lognormal, zeta (discrete
//! power law) and double Pareto lognormal. Densities, samplers, fitters and
//! the tail-restricted log-likelihood shared by model comparison.

mod continuous;
pub mod dpln;
mod freq;
mod optimize;
pub mod sample;
pub mod special;
pub mod zeta;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use continuous::{fit_exponential_mle, fit_lognormal_mle};
pub use dpln::{dpln_cdf, dpln_log_pdf, dpln_pdf, dpln_sample, dpln_sf, fit_dpln_moments, DplnParams};
pub use freq::{frequency_table, write_frequency_csv, FrequencyRow};
pub use special::{hurwitz_zeta, normal_cdf, normal_sf};
pub use zeta::{estimate_xmin, fit_zeta_mle, ks_distance_zeta, zeta_pmf, XminEstimate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("no values at or above xmin = {0}")]
    EmptyTail(f64),
    #[error("moment equations have no admissible solution: {0}")]
    InfeasibleMoments(String),
    #[error("solver did not converge after {0} iterations")]
    NonConvergence(usize),
}

/// The four candidate families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Exponential,
    Lognormal,
    Zeta,
    Dpln,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Exponential, Kind::Lognormal, Kind::Zeta, Kind::Dpln];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Exponential => "exponential",
            Kind::Lognormal => "lognormal",
            Kind::Zeta => "zeta",
            Kind::Dpln => "dpln",
        }
    }

    /// Label used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Kind::Exponential => "Exponential",
            Kind::Lognormal => "Lognormal",
            Kind::Zeta => "Power law",
            Kind::Dpln => "DPLN",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown distribution {s:?}"))
    }
}

/// Values at or above `xmin`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSample {
    values: Vec<f64>,
    xmin: f64,
}

impl TailSample {
    /// Keeps the values `>= xmin`. All values must be finite and positive.
    pub fn new(values: &[f64], xmin: f64) -> Result<Self, StatError> {
        if !(xmin > 0.0) || !xmin.is_finite() {
            return Err(StatError::Domain(format!("xmin must be positive, got {xmin}")));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(StatError::Domain(format!("sample value {bad} is not positive")));
        }
        let mut tail: Vec<f64> = values.iter().copied().filter(|&v| v >= xmin).collect();
        if tail.is_empty() {
            return Err(StatError::EmptyTail(xmin));
        }
        tail.sort_by(f64::total_cmp);
        Ok(TailSample { values: tail, xmin })
    }

    /// Degree sample: zeros are dropped, then the tail from `xmin` is kept.
    pub fn from_degrees(degrees: &[u64], xmin: u64) -> Result<Self, StatError> {
        if xmin == 0 {
            return Err(StatError::Domain("xmin must be at least 1".into()));
        }
        let values: Vec<f64> = degrees.iter().filter(|&&d| d > 0).map(|&d| d as f64).collect();
        Self::new(&values, xmin as f64)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn xmin(&self) -> f64 {
        self.xmin
    }

    pub fn n_tail(&self) -> usize {
        self.values.len()
    }

    pub(crate) fn has_two_distinct(&self) -> bool {
        self.values.first() != self.values.last()
    }
}

/// Fitted parameters, tagged with their family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Params {
    Exponential { lambda: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Zeta { alpha: f64 },
    Dpln(DplnParams),
}

impl Params {
    pub fn kind(&self) -> Kind {
        match self {
            Params::Exponential { .. } => Kind::Exponential,
            Params::Lognormal { .. } => Kind::Lognormal,
            Params::Zeta { .. } => Kind::Zeta,
            Params::Dpln(_) => Kind::Dpln,
        }
    }

    pub fn validate(&self) -> Result<(), StatError> {
        let ok = match *self {
            Params::Exponential { lambda } => lambda > 0.0 && lambda.is_finite(),
            Params::Lognormal { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            Params::Zeta { alpha } => alpha > 1.0 && alpha.is_finite(),
            Params::Dpln(p) => return p.validate(),
        };
        if ok {
            Ok(())
        } else {
            Err(StatError::Domain(format!("invalid parameters {self:?}")))
        }
    }

    /// Log density (log mass for zeta) of each tail value, normalized over
    /// `[xmin, inf)`.
    pub fn pointwise_log_likelihood(&self, sample: &TailSample) -> Result<Vec<f64>, StatError> {
        self.validate()?;
        let xmin = sample.xmin();
        let values = sample.values();
        Ok(match *self {
            Params::Exponential { lambda } => {
                let ln_lambda = lambda.ln();
                values.iter().map(|&x| ln_lambda - lambda * (x - xmin)).collect()
            }
            Params::Lognormal { mu, sigma } => {
                let ln_tail = special::log_normal_sf((xmin.ln() - mu) / sigma);
                values
                    .iter()
                    .map(|&x| continuous::lognormal_log_pdf(x, mu, sigma) - ln_tail)
                    .collect()
            }
            Params::Zeta { alpha } => {
                if let Some(bad) = values.iter().find(|v| v.fract() != 0.0) {
                    return Err(StatError::Domain(format!("zeta needs integer values, got {bad}")));
                }
                let ln_norm = hurwitz_zeta(alpha, xmin)?.ln();
                values.iter().map(|&x| -alpha * x.ln() - ln_norm).collect()
            }
            Params::Dpln(p) => {
                let ln_tail = dpln::dpln_log_sf(xmin, &p)?;
                values
                    .iter()
                    .map(|&x| dpln_log_pdf(x, &p).map(|l| l - ln_tail))
                    .collect::<Result<_, _>>()?
            }
        })
    }
}

/// A fitted candidate on a tail sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Params,
    pub xmin: f64,
    pub n_tail: usize,
    pub log_likelihood: f64,
}

impl FitResult {
    pub fn kind(&self) -> Kind {
        self.params.kind()
    }

    /// Evaluates `params` on `sample` and packages the result.
    pub fn evaluate(params: Params, sample: &TailSample) -> Result<Self, StatError> {
        let ll = log_likelihood(&params, sample)?;
        if !ll.is_finite() {
            return Err(StatError::Domain(format!("log-likelihood of {params:?} is not finite")));
        }
        Ok(FitResult {
            params,
            xmin: sample.xmin(),
            n_tail: sample.n_tail(),
            log_likelihood: ll,
        })
    }
}

/// Sum of tail-normalized log densities.
pub fn log_likelihood(params: &Params, sample: &TailSample) -> Result<f64, StatError> {
    Ok(params.pointwise_log_likelihood(sample)?.iter().sum())
}

/// Fits one family to the tail sample. DPLN uses the method of moments on
/// the tail values; the others use maximum likelihood.
pub fn fit(kind: Kind, sample: &TailSample) -> Result<FitResult, StatError> {
    match kind {
        Kind::Exponential => fit_exponential_mle(sample),
        Kind::Lognormal => fit_lognormal_mle(sample),
        Kind::Zeta => fit_zeta_mle(sample),
        Kind::Dpln => {
            let p = fit_dpln_moments(sample.values())?;
            FitResult::evaluate(Params::Dpln(p), sample)
        }
    }
}
