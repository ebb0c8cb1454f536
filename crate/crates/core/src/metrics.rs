//! Run-level metrics: global error, density error and the threshold/error
//! trend comparison.

use thiserror::Error;

use crate::scalar::Scalar;

/// Mean over workers of the residual L2 norms.
pub fn global_error<T: Scalar, R: AsRef<[T]>>(residuals: &[R]) -> f64 {
    if residuals.is_empty() {
        return 0.0;
    }
    let sum: f64 = residuals
        .iter()
        .map(|e| e.as_ref().iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt())
        .sum();
    sum / residuals.len() as f64
}

/// `|k − k′| / n_g`.
pub fn density_error(k: usize, k_prime: usize, n_g: usize) -> f64 {
    k.abs_diff(k_prime) as f64 / n_g as f64
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series are empty")]
    Empty,
    #[error("error series sums to zero")]
    ZeroErrorSum,
}

/// Rescales the error series so that it sums to the same total as the
/// threshold series: each entry is multiplied by `Σδ / Σ‖e‖`.
pub fn scaled_error_series(deltas: &[f64], errors: &[f64]) -> Result<Vec<f64>, SeriesError> {
    if deltas.len() != errors.len() {
        return Err(SeriesError::LengthMismatch(deltas.len(), errors.len()));
    }
    if deltas.is_empty() {
        return Err(SeriesError::Empty);
    }
    let err_sum: f64 = errors.iter().sum();
    if err_sum == 0.0 {
        return Err(SeriesError::ZeroErrorSum);
    }
    let ratio = deltas.iter().sum::<f64>() / err_sum;
    Ok(errors.iter().map(|e| e * ratio).collect())
}

/// Pearson correlation coefficient. `None` when either series is constant or
/// the lengths differ.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some(cov / (va.sqrt() * vb.sqrt()))
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_error_examples() {
        assert_eq!(global_error(&[vec![3.0f64, 4.0], vec![0.0, 0.0]]), 2.5);
        assert_eq!(global_error(&[vec![0.0f64; 3], vec![0.0; 3]]), 0.0);
        assert_eq!(global_error(&[vec![3.0f32, 4.0]]), 5.0);
    }

    #[test]
    fn density_error_examples() {
        assert!((density_error(1000, 1300, 1_000_000) - 3e-4).abs() < 1e-18);
        assert_eq!(density_error(1000, 1000, 1_000_000), 0.0);
        assert_eq!(density_error(1000, 0, 1_000_000), 0.001);
    }

    #[test]
    fn scaled_series_examples() {
        assert_eq!(scaled_error_series(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(scaled_error_series(&[0.5, 2.0], &[0.5, 2.0]).unwrap(), vec![0.5, 2.0]);
        assert_eq!(scaled_error_series(&[2.0, 4.0], &[1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
        assert_eq!(scaled_error_series(&[1.0], &[0.0]), Err(SeriesError::ZeroErrorSum));
        assert_eq!(scaled_error_series(&[1.0], &[1.0, 2.0]), Err(SeriesError::LengthMismatch(1, 2)));
        assert_eq!(scaled_error_series(&[], &[]), Err(SeriesError::Empty));
    }

    #[test]
    fn scaled_series_preserves_threshold_total() {
        let d = [0.3, 0.7, 1.1, 0.2];
        let e = [5.0, 9.0, 2.0, 7.5];
        let s = scaled_error_series(&d, &e).unwrap();
        assert!((s.iter().sum::<f64>() - d.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
    }
}
