use rand::Rng;

use crate::{Error, Result};

/// Converts log weights to normalized weights by subtracting the maximum
/// before exponentiating. Fails when no weight is finite.
pub fn normalize_log_weights(logs: &[f64]) -> Result<Vec<f64>> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    let mut w: Vec<f64> = logs.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// `1 / Σ w²` for normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Low-variance resampling: one uniform offset, `n` evenly spaced pointers.
/// Index `j` is drawn `⌊n·w_j⌋` or `⌈n·w_j⌉` times.
pub fn systematic_resample<R: Rng + ?Sized>(
    weights: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::DegenerateWeights);
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::DegenerateWeights);
    }
    let offset: f64 = rng.random();
    let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    let mut cum = weights[0] / total * n as f64;
    for k in 0..n {
        let u = k as f64 + offset;
        while cum <= u && j < last {
            j += 1;
            cum += weights[j] / total * n as f64;
        }
        out.push(j);
    }
    Ok(out)
}
