//! Block-partitioned threshold gradient sparsification with error feedback,
//! simulated on a deterministic multi-worker data-parallel SGD loop.
//!
//! The gradient vector is cut into fixed-size blocks grouped into one
//! contiguous partition per worker ([`partition`]). Every iteration the
//! partitions are rebalanced between neighbours and rotated across workers
//! ([`allocator`]); each worker then selects the entries of its own partition
//! whose accumulated magnitude reaches a shared threshold ([`selector`]),
//! and the threshold is nudged toward the target density ([`threshold`]).
//! The [`engine`] runs this inside a lockstep simulator whose
//! [`collectives`] count all-gather padding exactly. Top-k, CLT-k and a
//! fixed hard threshold are provided for comparison ([`baselines`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

pub mod allocator;
pub mod baselines;
pub mod collectives;
pub mod config;
pub mod engine;
pub mod metrics;
pub mod partition;
pub mod runner;
pub mod scalar;
pub mod selector;
pub mod threshold;
pub mod types;
pub mod workloads;

pub use config::{ConfigError, EtaStep, SparsifierConfig, ValidConfig};
pub use engine::{DenseSgd, Diagnostics, Engine, EngineError, Sparsifier, WorkerState};
pub use scalar::Scalar;
pub use types::{KOrder, LedgerRow, PartialK, PartitionTopology, SparseBatch};
pub use workloads::{GradientSource, StreamSpec, Task, TaskSpec};

pub type Engine64 = Engine<f64>;
pub type Engine32 = Engine<f32>;
pub type DenseSgd64 = DenseSgd<f64>;
pub type DenseSgd32 = DenseSgd<f32>;
pub type WorkerState64 = WorkerState<f64>;
pub type SparseBatch64 = SparseBatch<f64>;
