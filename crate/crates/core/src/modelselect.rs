//! Vuong likelihood-ratio comparisons between fitted candidates.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::special::normal_sf;
use crate::stats::{FitResult, Kind, StatError, TailSample};

/// Significance level for declaring one candidate better.
pub const SIGNIFICANCE: f64 = 0.05;

/// Candidate pairs compared for each degree direction, in table order.
pub const PAIRS: [(Kind, Kind); 5] = [
    (Kind::Exponential, Kind::Zeta),
    (Kind::Lognormal, Kind::Zeta),
    (Kind::Lognormal, Kind::Exponential),
    (Kind::Dpln, Kind::Zeta),
    (Kind::Dpln, Kind::Lognormal),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error("no {0} fit to compare")]
    MissingFit(Kind),
    #[error("fit for {kind} uses xmin {fit_xmin}, sample uses {sample_xmin}")]
    XminMismatch {
        kind: Kind,
        fit_xmin: f64,
        sample_xmin: f64,
    },
    #[error(transparent)]
    Stat(#[from] StatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in" => Ok(Direction::In),
            "out" => Ok(Direction::Out),
            other => Err(format!("direction must be 'in' or 'out', got {other:?}")),
        }
    }
}

/// Outcome of one comparison. Positive `r` favors `first`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrResult {
    pub first: Kind,
    pub second: Kind,
    pub direction: Direction,
    /// Summed pointwise log-likelihood difference.
    pub r: f64,
    /// Two-sided p-value of the normalized statistic.
    pub p_value: f64,
    pub n_tail: usize,
}

impl LlrResult {
    pub fn is_significant(&self) -> bool {
        self.p_value < SIGNIFICANCE
    }

    /// The favored candidate, when the difference is significant.
    pub fn better(&self) -> Option<Kind> {
        if !self.is_significant() || self.r == 0.0 {
            None
        } else if self.r > 0.0 {
            Some(self.first)
        } else {
            Some(self.second)
        }
    }
}

/// Vuong test on the tail sample. With `d_i` the pointwise log-likelihood
/// differences, `R = sum d_i`, `V = R / (s_d sqrt(n))` and `p = 2 Phi(-|V|)`.
/// When every `d_i` is equal the statistic is undefined: `p` is 1 if
/// `R = 0` and 0 otherwise.
pub fn vuong_test(
    sample: &TailSample,
    first: &FitResult,
    second: &FitResult,
    direction: Direction,
) -> Result<LlrResult, CompareError> {
    for fit in [first, second] {
        if fit.xmin != sample.xmin() {
            return Err(CompareError::XminMismatch {
                kind: fit.kind(),
                fit_xmin: fit.xmin,
                sample_xmin: sample.xmin(),
            });
        }
    }
    let a = first.params.pointwise_log_likelihood(sample)?;
    let b = second.params.pointwise_log_likelihood(sample)?;
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let r: f64 = d.iter().sum();
    let mean = r / n as f64;
    let var = if n > 1 {
        d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let sd = var.sqrt();
    let p_value = if sd > 0.0 {
        let v = r / (sd * (n as f64).sqrt());
        (2.0 * normal_sf(v.abs())).min(1.0)
    } else if r == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(LlrResult {
        first: first.kind(),
        second: second.kind(),
        direction,
        r,
        p_value,
        n_tail: n,
    })
}

/// Runs every pair in [`PAIRS`]. All four candidates must be present.
pub fn compare_all(
    sample: &TailSample,
    fits: &[FitResult],
    direction: Direction,
) -> Result<Vec<LlrResult>, CompareError> {
    let find = |k: Kind| fits.iter().find(|f| f.kind() == k).ok_or(CompareError::MissingFit(k));
    for k in Kind::ALL {
        find(k)?;
    }
    PAIRS
        .iter()
        .map(|&(a, b)| vuong_test(sample, find(a)?, find(b)?, direction))
        .collect()
}

#[derive(Debug, Serialize)]
struct ComparisonRow<'a> {
    first: &'a str,
    second: &'a str,
    direction: &'a str,
    #[serde(rename = "R")]
    r: f64,
    p_value: f64,
    better: &'a str,
}

/// `first,second,direction,R,p_value,better`; `better` is `none` when the
/// difference is not significant.
pub fn write_comparison_csv<W: io::Write>(results: &[LlrResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for res in results {
        w.serialize(ComparisonRow {
            first: res.first.as_str(),
            second: res.second.as_str(),
            direction: res.direction.as_str(),
            r: res.r,
            p_value: res.p_value,
            better: res.better().map_or("none", Kind::as_str),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::sample::zeta_sample;
    use crate::stats::{fit, Params};

    fn sample() -> TailSample {
        let draws = zeta_sample(2.3, 1, 3_000, 17).unwrap();
        TailSample::from_degrees(&draws, 2).unwrap()
    }

    #[test]
    fn identical_fits() {
        let s = sample();
        let f = fit(Kind::Lognormal, &s).unwrap();
        let res = vuong_test(&s, &f, &f, Direction::In).unwrap();
        assert_eq!(res.r, 0.0);
        assert_eq!(res.p_value, 1.0);
        assert_eq!(res.better(), None);
    }

    #[test]
    fn swap_negates_r() {
        let s = sample();
        let a = fit(Kind::Zeta, &s).unwrap();
        let b = fit(Kind::Exponential, &s).unwrap();
        let ab = vuong_test(&s, &a, &b, Direction::Out).unwrap();
        let ba = vuong_test(&s, &b, &a, Direction::Out).unwrap();
        assert_eq!(ab.r, -ba.r);
        assert_eq!(ab.p_value, ba.p_value);
        assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn zero_variance() {
        // a single tail point has no spread: p is 0 for a nonzero R
        let s = TailSample::from_degrees(&[5], 2).unwrap();
        let a = FitResult::evaluate(Params::Exponential { lambda: 1.0 }, &s).unwrap();
        let b = FitResult::evaluate(Params::Exponential { lambda: 2.0 }, &s).unwrap();
        let res = vuong_test(&s, &a, &b, Direction::In).unwrap();
        assert!(res.r > 0.0);
        assert_eq!(res.p_value, 0.0);
        assert_eq!(vuong_test(&s, &a, &a, Direction::In).unwrap().p_value, 1.0);
    }

    #[test]
    fn xmin_mismatch() {
        let s = sample();
        let other = TailSample::from_degrees(&zeta_sample(2.3, 1, 500, 1).unwrap(), 1).unwrap();
        let a = fit(Kind::Zeta, &other).unwrap();
        let b = fit(Kind::Exponential, &s).unwrap();
        assert!(matches!(
            vuong_test(&s, &a, &b, Direction::In),
            Err(CompareError::XminMismatch { .. })
        ));
    }

    #[test]
    fn missing_dpln() {
        let s = sample();
        let fits: Vec<FitResult> = [Kind::Exponential, Kind::Lognormal, Kind::Zeta]
            .into_iter()
            .map(|k| fit(k, &s).unwrap())
            .collect();
        let err = compare_all(&s, &fits, Direction::In).unwrap_err();
        assert_eq!(err, CompareError::MissingFit(Kind::Dpln));
        assert!(err.to_string().contains("dpln"));
    }

    #[test]
    fn csv_layout() {
        let res = LlrResult {
            first: Kind::Lognormal,
            second: Kind::Exponential,
            direction: Direction::In,
            r: 12.5,
            p_value: 0.001,
            n_tail: 10,
        };
        let mut buf = Vec::new();
        write_comparison_csv(&[res], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "first,second,direction,R,p_value,better\nlognormal,exponential,in,12.5,0.001,lognormal\n"
        );
    }
}
