//! Simulated collectives with exact traffic accounting.
//!
//! Each collective takes the inputs of all `n` ranks at once, so calling one
//! is a barrier: nothing downstream can run before every rank contributed.
//! Inputs are always combined in rank order, which makes the floating-point
//! results independent of how the per-rank work was scheduled.

use crate::scalar::Scalar;
use crate::selector::LengthMismatch;
use crate::types::{KOrder, PartialK, SparseBatch};

/// Outcome of gathering every rank's selected indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GatherResult {
    /// Sorted union of all selected indices.
    pub idx_global: Vec<usize>,
    /// Per-rank counts `k_{i,t}`, rank order.
    pub k_rank: PartialK,
    /// Largest per-rank payload.
    pub m_t: usize,
    /// Padding overhead `n · Σ (m_t − k_{i,t})`.
    pub c_t: u64,
    /// Traffic relative to the perfectly balanced case, `n·m_t / Σ k_{i,t}`.
    /// Defined as 1 when nothing was selected.
    pub f_t: f64,
    /// Entries selected by more than one rank, with multiplicity.
    pub duplicates: u64,
}

impl GatherResult {
    /// Deduplicated aggregate count.
    pub fn k_prime(&self) -> usize {
        self.idx_global.len()
    }

    /// Selected entries including duplicates.
    pub fn total_selected(&self) -> u64 {
        self.k_rank.total()
    }
}

/// Gathers the batches of all ranks (given in rank order), padding every
/// payload to the largest one.
pub fn all_gather<T: Scalar>(batches: &mut [SparseBatch<T>]) -> GatherResult {
    let n = batches.len();
    let counts: Vec<u64> = batches.iter().map(|b| b.valid_count() as u64).collect();
    let m_t = batches.iter().map(|b| b.valid_count()).max().unwrap_or(0);
    for b in batches.iter_mut() {
        b.padded_length = m_t;
    }
    let total: u64 = counts.iter().sum();
    let c_t = n as u64 * counts.iter().map(|&c| m_t as u64 - c).sum::<u64>();
    let f_t = if total > 0 { (n * m_t) as f64 / total as f64 } else { 1.0 };

    let mut idx_global: Vec<usize> = Vec::with_capacity(total as usize);
    for b in batches.iter() {
        idx_global.extend_from_slice(&b.indices);
    }
    idx_global.sort_unstable();
    idx_global.dedup();
    let duplicates = total - idx_global.len() as u64;

    GatherResult {
        idx_global,
        k_rank: PartialK::new(counts, KOrder::Rank),
        m_t,
        c_t,
        f_t,
        duplicates,
    }
}

/// Elementwise sum of equal-length vectors, accumulated in rank order.
pub fn all_reduce_sum<T: Scalar>(contributions: &[Vec<T>]) -> Result<Vec<T>, LengthMismatch> {
    let Some((first, rest)) = contributions.split_first() else {
        return Ok(Vec::new());
    };
    let mut out = first.clone();
    for c in rest {
        if c.len() != out.len() {
            return Err(LengthMismatch { residual: out.len(), gradient: c.len() });
        }
        for (o, &v) in out.iter_mut().zip(c) {
            *o += v;
        }
    }
    Ok(out)
}

/// Copies the leader's payload to all `n` ranks.
pub fn broadcast<P: Clone>(payload: &P, n: usize) -> Vec<P> {
    vec![payload.clone(); n]
}
