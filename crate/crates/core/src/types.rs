//! Domain types shared by the partitioning, allocation, selection and
//! accounting stages.

use std::ops::Range;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("topology has {blk_part} block counts but {blk_pos} start positions")]
    LengthMismatch { blk_part: usize, blk_pos: usize },
    #[error("topology has no partitions")]
    Empty,
    #[error("blk_pos[0] = {0}, expected 0")]
    FirstPosition(usize),
    #[error("prefix-sum broken at partition {0}")]
    PrefixSum(usize),
    #[error("partition {partition} holds {blocks} blocks, below min_blk = {min_blk}")]
    BelowMinimum { partition: usize, blocks: usize, min_blk: usize },
    #[error("sum(blk_part) = {actual}, expected n_b = {expected}")]
    BlockCount { actual: usize, expected: usize },
    #[error("blocks cover {covered} gradients but the model has only {n_g}")]
    Overflow { covered: usize, n_g: usize },
    #[error("block size must be positive")]
    ZeroBlockSize,
}

/// Block-based layout of the gradient vector into `n` contiguous partitions.
///
/// Partition `p` covers blocks `blk_pos[p] .. blk_pos[p] + blk_part[p]`.
/// The last partition additionally absorbs the tail `n_b·sz_blk .. n_g` that
/// does not fill a whole block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionTopology {
    sz_blk: usize,
    blk_part: Vec<usize>,
    blk_pos: Vec<usize>,
    n_g: usize,
}

impl PartitionTopology {
    /// Builds a topology from block counts; start positions are the prefix sum.
    pub fn from_block_counts(
        sz_blk: usize,
        blk_part: Vec<usize>,
        n_g: usize,
    ) -> Result<Self, TopologyError> {
        if blk_part.is_empty() {
            return Err(TopologyError::Empty);
        }
        if sz_blk == 0 {
            return Err(TopologyError::ZeroBlockSize);
        }
        let mut blk_pos = vec![0; blk_part.len()];
        for i in 1..blk_part.len() {
            blk_pos[i] = blk_pos[i - 1] + blk_part[i - 1];
        }
        let topology = Self { sz_blk, blk_part, blk_pos, n_g };
        let covered = topology.n_b() * sz_blk;
        if covered > n_g {
            return Err(TopologyError::Overflow { covered, n_g });
        }
        Ok(topology)
    }

    pub(crate) fn from_raw_parts(
        sz_blk: usize,
        blk_part: Vec<usize>,
        blk_pos: Vec<usize>,
        n_g: usize,
    ) -> Self {
        Self { sz_blk, blk_part, blk_pos, n_g }
    }

    /// Gradients per block.
    pub fn sz_blk(&self) -> usize {
        self.sz_blk
    }

    pub fn blk_part(&self) -> &[usize] {
        &self.blk_part
    }

    pub fn blk_pos(&self) -> &[usize] {
        &self.blk_pos
    }

    /// Model gradient count.
    pub fn n_g(&self) -> usize {
        self.n_g
    }

    /// Partition count.
    pub fn n(&self) -> usize {
        self.blk_part.len()
    }

    /// Total blocks.
    pub fn n_b(&self) -> usize {
        self.blk_part.iter().sum()
    }

    /// Gradient index range of partition `p`.
    pub fn range(&self, p: usize) -> Range<usize> {
        let st = self.blk_pos[p] * self.sz_blk;
        let end = if p + 1 == self.n() {
            self.n_g
        } else {
            (self.blk_pos[p] + self.blk_part[p]) * self.sz_blk
        };
        st..end
    }

    /// Checks the structural invariants: prefix-sum positions, block total,
    /// minimum occupancy and coverage.
    pub fn check(&self, n_b: usize, min_blk: usize) -> Result<(), TopologyError> {
        if self.blk_part.len() != self.blk_pos.len() {
            return Err(TopologyError::LengthMismatch {
                blk_part: self.blk_part.len(),
                blk_pos: self.blk_pos.len(),
            });
        }
        if self.blk_part.is_empty() {
            return Err(TopologyError::Empty);
        }
        if self.sz_blk == 0 {
            return Err(TopologyError::ZeroBlockSize);
        }
        if self.blk_pos[0] != 0 {
            return Err(TopologyError::FirstPosition(self.blk_pos[0]));
        }
        for i in 1..self.n() {
            if self.blk_pos[i] != self.blk_pos[i - 1] + self.blk_part[i - 1] {
                return Err(TopologyError::PrefixSum(i));
            }
        }
        for (partition, &blocks) in self.blk_part.iter().enumerate() {
            if blocks < min_blk {
                return Err(TopologyError::BelowMinimum { partition, blocks, min_blk });
            }
        }
        let actual = self.n_b();
        if actual != n_b {
            return Err(TopologyError::BlockCount { actual, expected: n_b });
        }
        let covered = actual * self.sz_blk;
        if covered > self.n_g {
            return Err(TopologyError::Overflow { covered, n_g: self.n_g });
        }
        Ok(())
    }
}

/// Which index a [`PartialK`] entry is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KOrder {
    /// Entry `i` is the count selected by worker rank `i`.
    Rank,
    /// Entry `p` is the count selected inside partition `p`.
    Partition,
}

/// Per-partition selected-gradient counts of one iteration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialK {
    pub counts: Vec<u64>,
    pub order: KOrder,
}

impl PartialK {
    pub fn new(counts: Vec<u64>, order: KOrder) -> Self {
        Self { counts, order }
    }

    /// Splits `k` as evenly as possible over `n` entries; the first `k mod n`
    /// entries get one extra.
    pub fn uniform(k: usize, n: usize) -> Self {
        let (q, r) = (k / n, k % n);
        let counts = (0..n).map(|i| (q + usize::from(i < r)) as u64).collect();
        Self { counts, order: KOrder::Rank }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// One worker's selection for one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBatch<T> {
    pub rank: usize,
    /// Strictly ascending absolute gradient indices.
    pub indices: Vec<usize>,
    /// Accumulated values at `indices`.
    pub values: Vec<T>,
    /// Payload length after all-gather padding; zero until gathered.
    pub padded_length: usize,
}

impl<T: Scalar> SparseBatch<T> {
    /// Builds a batch from indices, reading values out of `acc`.
    pub fn from_indices(rank: usize, indices: Vec<usize>, acc: &[T]) -> Self {
        let values = indices.iter().map(|&j| acc[j]).collect();
        Self { rank, indices, values, padded_length: 0 }
    }

    /// `k_{i,t}`.
    pub fn valid_count(&self) -> usize {
        self.indices.len()
    }

    /// True when indices are strictly ascending, in `[0, n_g)`, and match
    /// the value count.
    pub fn is_well_formed(&self, n_g: usize) -> bool {
        self.indices.len() == self.values.len()
            && self.indices.windows(2).all(|w| w[0] < w[1])
            && self.indices.last().is_none_or(|&j| j < n_g)
    }
}

/// One row of the per-iteration traffic ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub t: usize,
    /// Aggregated (deduplicated) selected-gradient count.
    pub k_prime: usize,
    /// `k′ / n_g`.
    pub density: f64,
    /// `|k − k′| / n_g`.
    pub eps: f64,
    pub m_t: usize,
    pub c_t: u64,
    pub f_t: f64,
    /// Mean L2 norm of the residuals left after this iteration.
    pub global_err: f64,
    /// Threshold used for selection in this iteration.
    pub delta: f64,
    pub loss: Option<f64>,
    /// Per-rank selection counts, rank order.
    pub k_rank: Vec<u64>,
    /// Indices selected by more than one worker, counted with multiplicity.
    pub duplicates: u64,
    /// Workers idle during selection (CLT-k followers).
    pub idle_workers: usize,
    /// Block moves skipped by the `min_blk` guard.
    pub skipped_moves: u64,
    /// Partitions whose selection was truncated by the density cap.
    pub cap_hits: usize,
}

impl LedgerRow {
    /// CSV column names, in order.
    pub const CSV_HEADER: &'static str =
        "t,k_prime,density,eps,m_t,C_t,f_t,global_err,delta,loss";

    /// Version of the CSV column layout.
    pub const CSV_VERSION: u32 = 1;

    /// Formats the row as one CSV line, without trailing newline. An absent
    /// loss is written as an empty field.
    pub fn to_csv(&self) -> String {
        let loss = self.loss.map(|l| l.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.t,
            self.k_prime,
            self.density,
            self.eps,
            self.m_t,
            self.c_t,
            self.f_t,
            self.global_err,
            self.delta,
            loss
        )
    }

    /// Sum of per-rank selections, including duplicates.
    pub fn total_selected(&self) -> u64 {
        self.k_rank.iter().sum()
    }
}
