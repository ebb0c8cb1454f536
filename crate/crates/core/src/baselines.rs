//! Comparison sparsifiers: Top-k, cyclic local top-k (CLT-k) and a fixed
//! hard threshold.

use thiserror::Error;

use crate::scalar::Scalar;
use crate::selector::{by_magnitude, select_indices};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("k = {k} outside [1, {len}]")]
pub struct KOutOfRange {
    pub k: usize,
    pub len: usize,
}

/// Indices of the `k` largest `|acc|`, ascending. Ties go to the lower index.
pub fn topk_select<T: Scalar>(acc: &[T], k: usize) -> Result<Vec<usize>, KOutOfRange> {
    if k == 0 || k > acc.len() {
        return Err(KOutOfRange { k, len: acc.len() });
    }
    let mut idx: Vec<usize> = (0..acc.len()).collect();
    if k < acc.len() {
        idx.select_nth_unstable_by(k - 1, by_magnitude(acc));
        idx.truncate(k);
    }
    idx.sort_unstable();
    Ok(idx)
}

/// Every index with `|acc| >= delta` over the whole vector.
pub fn hard_threshold_select<T: Scalar>(acc: &[T], delta: T) -> Vec<usize> {
    select_indices(acc, 0..acc.len(), delta)
}

/// Rank that selects on behalf of everyone at iteration `t`.
pub fn cltk_leader(t: usize, n: usize) -> usize {
    t % n
}

/// CLT-k selection: the leader's top-k. Returns the leader and its indices;
/// the caller broadcasts them.
pub fn cltk_select<T: Scalar, A: AsRef<[T]>>(
    accs: &[A],
    t: usize,
    k: usize,
) -> Result<(usize, Vec<usize>), KOutOfRange> {
    let leader = cltk_leader(t, accs.len());
    Ok((leader, topk_select(accs[leader].as_ref(), k)?))
}
