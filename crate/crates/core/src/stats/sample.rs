//! Seeded samplers for the candidate families. Used for parameter-recovery
//! checks and benchmarks; every function takes an explicit seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Zeta};

use super::StatError;

pub use super::dpln::dpln_sample;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Zeta draws conditioned on `x >= xmin` (rejection from the full law).
pub fn zeta_sample(alpha: f64, xmin: u64, n: usize, seed: u64) -> Result<Vec<u64>, StatError> {
    if xmin == 0 {
        return Err(StatError::Domain("xmin must be at least 1".into()));
    }
    let dist = Zeta::new(alpha).map_err(|e| StatError::Domain(format!("zeta({alpha}): {e}")))?;
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: f64 = dist.sample(&mut rng);
        if x >= xmin as f64 && x < u64::MAX as f64 {
            out.push(x as u64);
        }
    }
    Ok(out)
}

pub fn lognormal_sample(mu: f64, sigma: f64, n: usize, seed: u64) -> Result<Vec<f64>, StatError> {
    let dist = LogNormal::new(mu, sigma).map_err(|e| StatError::Domain(format!("lognormal: {e}")))?;
    let mut rng = rng(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// `xmin + Exp(lambda)`
pub fn exponential_sample(lambda: f64, xmin: f64, n: usize, seed: u64) -> Result<Vec<f64>, StatError> {
    let dist = Exp::new(lambda).map_err(|e| StatError::Domain(format!("exponential: {e}")))?;
    let mut rng = rng(seed);
    Ok((0..n).map(|_| xmin + dist.sample(&mut rng)).collect())
}
