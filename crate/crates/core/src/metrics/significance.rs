use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub const MIN_BOOTSTRAP_ITERATIONS: usize = 1000;

/// Two-sided paired bootstrap p-value for the mean of `a - b`.
///
/// The per-pair differences are resampled with replacement; each resampled
/// mean is centred on the observed mean, and the p-value is the share of
/// centred means at least as extreme as the observed one, with the usual +1
/// correction so it is never exactly zero. Identical inputs give 1.0.
pub fn paired_significance(a: &[f64], b: &[f64], seed: u64, iterations: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::param(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::param("paired bootstrap needs at least 2 pairs"));
    }
    if iterations < MIN_BOOTSTRAP_ITERATIONS {
        return Err(Error::param(format!(
            "bootstrap iterations {iterations} below minimum {MIN_BOOTSTRAP_ITERATIONS}"
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::param("paired bootstrap inputs must be finite"));
    }

    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len();
    let observed = diffs.iter().sum::<f64>() / n as f64;
    // Relative slack so resampling a constant difference cannot look "more
    // extreme" through rounding alone.
    let slack = 1e-12 * (1.0 + observed.abs());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut extreme = 0usize;
    for _ in 0..iterations {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += diffs[rng.gen_range(0..n)];
        }
        let centred = sum / n as f64 - observed;
        if centred.abs() + slack >= observed.abs() {
            extreme += 1;
        }
    }
    Ok((extreme + 1) as f64 / (iterations + 1) as f64)
}
