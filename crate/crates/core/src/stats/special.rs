//! Hurwitz zeta and standard normal distribution functions.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

use super::StatError;

/// `(2j)! / B_2j` for j = 1..12, the Euler-Maclaurin correction divisors.
#[allow(clippy::excessive_precision)]
const EULER_MACLAURIN: [f64; 12] = [
    12.0,
    -720.0,
    30240.0,
    -1209600.0,
    47900160.0,
    -1.8924375803183791606e9,
    7.47242496e10,
    -2.950130727918164224e12,
    1.1646782814350067249e14,
    -4.5979787224074726105e15,
    1.8152105401943546773e17,
    -7.1661652561756670113e18,
];

/// `sum_{n >= 0} (q + n)^(-s)` for `s > 1`, `q > 0`.
///
/// Sums at least ten leading terms directly, then closes the series with
/// the Euler-Maclaurin tail. Relative error is near machine precision.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64, StatError> {
    if !(s > 1.0) || !s.is_finite() {
        return Err(StatError::Domain(format!("hurwitz zeta needs s > 1, got {s}")));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(StatError::Domain(format!("hurwitz zeta needs q > 0, got {q}")));
    }
    let mut sum = q.powf(-s);
    let mut a = q;
    let mut b = 0.0;
    let mut i = 0;
    while i < 9 || a <= 9.0 {
        i += 1;
        a += 1.0;
        b = a.powf(-s);
        sum += b;
        if (b / sum).abs() < f64::EPSILON {
            return Ok(sum);
        }
    }
    let w = a;
    sum += b * w / (s - 1.0);
    sum -= 0.5 * b;
    let mut fac = 1.0;
    let mut k = 0.0;
    for div in EULER_MACLAURIN {
        fac *= s + k;
        b /= w;
        let t = fac * b / div;
        sum += t;
        if (t / sum).abs() < f64::EPSILON {
            break;
        }
        k += 1.0;
        fac *= s + k;
        b /= w;
        k += 1.0;
    }
    Ok(sum)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `1 - normal_cdf(x)` without cancellation for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `ln normal_cdf(x)`, finite for every finite `x`.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-normal_sf(x)).ln_1p()
    } else if x > -35.0 {
        normal_cdf(x).ln()
    } else {
        // Mills ratio asymptotic series
        let x2 = x * x;
        let inv = 1.0 / x2;
        let series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

/// `ln normal_sf(x)`.
pub fn log_normal_sf(x: f64) -> f64 {
    log_normal_cdf(-x)
}
