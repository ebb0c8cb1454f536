//! Per-iteration dynamic partition allocation.
//!
//! Every worker runs these steps on its own replica of the control state.
//! They are deterministic functions of that state, so replicas stay
//! identical without extra communication.

use std::ops::Range;

use crate::config::modulo;
use crate::types::{KOrder, PartialK, PartitionTopology};

/// Maps counts gathered in rank order at iteration `t − 1` back to the
/// partitions those ranks were allocated.
///
/// Rank `i` held partition `((t − 1) mod n + i) mod n` at `t − 1`.
pub fn rotate_to_partition_order(k_rank: &PartialK, t: usize) -> PartialK {
    let n = k_rank.counts.len();
    let mut counts = vec![0; n];
    let shift = modulo(t as i64 - 1, n);
    for (i, &c) in k_rank.counts.iter().enumerate() {
        counts[(shift + i) % n] = c;
    }
    PartialK::new(counts, KOrder::Partition)
}

/// Parameters of the block-migration sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustParams {
    pub alpha: f64,
    pub blk_move: usize,
    pub min_blk: usize,
}

/// Result of one migration sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjustment {
    pub topology: PartitionTopology,
    pub k_part: PartialK,
    /// Moves suppressed because the donor would fall below `min_blk`.
    pub skipped: u64,
    pub moved: u64,
}

/// One left-to-right sweep over adjacent partition pairs.
///
/// A pair is rebalanced when one side selected more than `alpha` times the
/// mean per-partition count and the other fewer than `1/alpha` times it:
/// `blk_move` blocks move from the heavy to the light side, and an estimated
/// `blk_move·sz_blk·(k′/n_g)` counts move with them (rounded, and capped at
/// the donor's count so the total is conserved).
pub fn adjust_topology(
    topology: &PartitionTopology,
    k_part: &PartialK,
    params: AdjustParams,
) -> Adjustment {
    debug_assert_eq!(k_part.order, KOrder::Partition);
    let n = topology.n();
    let mut blk_part = topology.blk_part().to_vec();
    let mut blk_pos = topology.blk_pos().to_vec();
    let mut counts = k_part.counts.clone();
    let mut skipped = 0;
    let mut moved = 0;

    let total: u64 = counts.iter().sum();
    if total > 0 && n > 1 {
        let pk_prev = total as f64 / n as f64;
        let den_prev = total as f64 / topology.n_g() as f64;
        let k_move = (params.blk_move as f64 * topology.sz_blk() as f64 * den_prev).round() as u64;
        let lower = 1.0 / params.alpha;
        for i in 0..n - 1 {
            let det = counts[i] as f64 / pk_prev;
            let det2 = counts[i + 1] as f64 / pk_prev;
            if det > params.alpha && det2 < lower {
                if blk_part[i] < params.min_blk + params.blk_move {
                    skipped += 1;
                    continue;
                }
                blk_part[i] -= params.blk_move;
                blk_part[i + 1] += params.blk_move;
                blk_pos[i + 1] -= params.blk_move;
                let c = k_move.min(counts[i]);
                counts[i] -= c;
                counts[i + 1] += c;
                moved += 1;
            } else if det < lower && det2 > params.alpha {
                if blk_part[i + 1] < params.min_blk + params.blk_move {
                    skipped += 1;
                    continue;
                }
                blk_part[i] += params.blk_move;
                blk_part[i + 1] -= params.blk_move;
                blk_pos[i + 1] += params.blk_move;
                let c = k_move.min(counts[i + 1]);
                counts[i] += c;
                counts[i + 1] -= c;
                moved += 1;
            }
        }
    }

    Adjustment {
        topology: PartitionTopology::from_raw_parts(
            topology.sz_blk(),
            blk_part,
            blk_pos,
            topology.n_g(),
        ),
        k_part: PartialK::new(counts, KOrder::Partition),
        skipped,
        moved,
    }
}

/// Partition index allocated to `rank` at iteration `t`.
pub fn allocated_partition(t: usize, rank: usize, n: usize) -> usize {
    (t % n + rank) % n
}

/// Gradient index range allocated to `rank` at iteration `t`.
pub fn allocate_partition(topology: &PartitionTopology, t: usize, rank: usize) -> Range<usize> {
    topology.range(allocated_partition(t, rank, topology.n()))
}
