//! Initial block-based partitioning, run once before the first iteration.

use thiserror::Error;

use crate::types::{PartitionTopology, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("partition {partition} would get {blocks} blocks, below min_blk = {min_blk}")]
    BelowMinimum { partition: usize, blocks: usize, min_blk: usize },
    #[error("worker count must be >= 1")]
    NoWorkers,
    #[error("block count must be in [1, n_g]")]
    BadBlockCount,
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Block size for `n_g` gradients in `n_b` blocks.
///
/// Returns the size and whether it is 32-aligned. The size is
/// `floor(n_g/n_b)` rounded down to a multiple of 32; when that quotient is
/// below 32 the unaligned quotient (at least 1) is used instead.
pub fn block_size(n_g: usize, n_b: usize) -> (usize, bool) {
    let temp = n_g / n_b;
    if temp >= 32 {
        (temp - temp % 32, true)
    } else {
        (temp.max(1), false)
    }
}

/// Splits `n_g` gradients into `n_b` blocks grouped into `n` contiguous
/// partitions. The first `n_b mod n` partitions get one extra block.
pub fn build_topology(
    n_g: usize,
    n_b: usize,
    n: usize,
    min_blk: usize,
) -> Result<PartitionTopology, PartitionError> {
    if n == 0 {
        return Err(PartitionError::NoWorkers);
    }
    if n_b == 0 || n_b > n_g {
        return Err(PartitionError::BadBlockCount);
    }
    let (sz_blk, _) = block_size(n_g, n_b);
    let quotient = n_b / n;
    let remainder = n_b % n;
    let blk_part: Vec<usize> =
        (0..n).map(|i| if i < remainder { quotient + 1 } else { quotient }).collect();
    if let Some((partition, &blocks)) = blk_part.iter().enumerate().find(|(_, &b)| b < min_blk) {
        return Err(PartitionError::BelowMinimum { partition, blocks, min_blk });
    }
    Ok(PartitionTopology::from_block_counts(sz_blk, blk_part, n_g)?)
}
