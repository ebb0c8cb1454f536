//! Error-feedback accumulation and threshold selection inside one partition.

use std::cmp::Ordering;
use std::ops::Range;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("length mismatch: residual has {residual} entries, gradient has {gradient}")]
pub struct LengthMismatch {
    pub residual: usize,
    pub gradient: usize,
}

/// `acc = e + eta·grad`.
pub fn accumulate<T: Scalar>(e: &[T], eta: T, grad: &[T]) -> Result<Vec<T>, LengthMismatch> {
    check_len(e.len(), grad.len())?;
    Ok(e.iter().zip(grad).map(|(&r, &g)| r + eta * g).collect())
}

/// In-place form of [`accumulate`]: `e` becomes the accumulated vector.
pub fn accumulate_into<T: Scalar>(e: &mut [T], eta: T, grad: &[T]) -> Result<(), LengthMismatch> {
    check_len(e.len(), grad.len())?;
    for (r, &g) in e.iter_mut().zip(grad) {
        *r += eta * g;
    }
    Ok(())
}

fn check_len(residual: usize, gradient: usize) -> Result<(), LengthMismatch> {
    if residual == gradient {
        Ok(())
    } else {
        Err(LengthMismatch { residual, gradient })
    }
}

/// Absolute indices `j` in `range` with `|acc[j]| >= delta`, ascending.
pub fn select_indices<T: Scalar>(acc: &[T], range: Range<usize>, delta: T) -> Vec<usize> {
    let st = range.start;
    acc[range]
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= delta)
        .map(|(j, _)| j + st)
        .collect()
}

/// Zeroes `acc` at `indices`; what remains is the next residual.
pub fn clear_selected<T: Scalar>(acc: &mut [T], indices: &[usize]) {
    for &j in indices {
        acc[j] = T::zero();
    }
}

/// Orders indices by descending `|acc|`, ties toward the lower index.
pub(crate) fn by_magnitude<T: Scalar>(acc: &[T]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| {
        acc[b]
            .abs()
            .partial_cmp(&acc[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    }
}

/// Keeps the `cap` largest-magnitude entries of an ascending index list.
/// Returns whether anything was dropped.
pub fn cap_selection<T: Scalar>(acc: &[T], indices: &mut Vec<usize>, cap: usize) -> bool {
    if indices.len() <= cap {
        return false;
    }
    let cmp = by_magnitude(acc);
    if cap > 0 {
        indices.select_nth_unstable_by(cap - 1, &cmp);
    }
    indices.truncate(cap);
    indices.sort_unstable();
    true
}
