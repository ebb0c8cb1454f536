//! Online threshold scaling.

use thiserror::Error;

use crate::scalar::Scalar;

/// Multiplicative update of the selection threshold from the ratio
/// `k′ / k`:
///
/// | `k′ / k`               | factor      |
/// |------------------------|-------------|
/// | `> beta`               | `1 + γ`     |
/// | `(1/beta, beta]`       | `1 + γ/4`   |
/// | `<= 1/beta`            | `1 − γ`     |
///
/// The in-band factor is a slight increase, not a no-op; in steady state
/// this biases `k′` slightly below `k`.
pub fn scale_threshold<T: Scalar>(k: usize, k_prime: usize, delta: T, beta: f64, gamma: f64) -> T {
    delta * T::of(scale_factor(k, k_prime, beta, gamma))
}

/// The factor applied by [`scale_threshold`].
pub fn scale_factor(k: usize, k_prime: usize, beta: f64, gamma: f64) -> f64 {
    let exam = k_prime as f64 / k as f64;
    if exam > beta {
        1.0 + gamma
    } else if exam > 1.0 / beta {
        1.0 + gamma / 4.0
    } else {
        1.0 - gamma
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot estimate a threshold from an empty sample")]
pub struct EmptySample;

/// Threshold that would select a `d` fraction of `sample`: the
/// `max(1, round(d·len))`-th largest magnitude.
pub fn initial_threshold<T: Scalar>(sample: &[T], d: f64) -> Result<T, EmptySample> {
    if sample.is_empty() {
        return Err(EmptySample);
    }
    let mut mags: Vec<T> = sample.iter().map(|v| v.abs()).collect();
    let take = ((d * mags.len() as f64).round() as usize).clamp(1, mags.len());
    let (_, nth, _) = mags.select_nth_unstable_by(take - 1, |a, b| {
        b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(*nth)
}
