//! Lockstep distributed-SGD simulator.
//!
//! Each iteration runs per-worker phases (possibly in parallel) separated by
//! simulated collectives. Every worker keeps its own replica of the model and
//! of the control state (threshold, partial-k vector, topology) and updates
//! it independently; with `verify` on, the engine checks after every
//! iteration that the replicas are still bit-identical and that the
//! bookkeeping identities hold.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::allocator::{adjust_topology, allocate_partition, rotate_to_partition_order, AdjustParams};
use crate::baselines::{cltk_select, hard_threshold_select, topk_select, KOutOfRange};
use crate::collectives::{all_gather, all_reduce_sum, broadcast, GatherResult};
use crate::config::ValidConfig;
use crate::metrics::{density_error, global_error};
use crate::partition::{build_topology, PartitionError};
use crate::scalar::{slices_bit_eq, Scalar};
use crate::selector::{accumulate_into, cap_selection, clear_selected, select_indices, LengthMismatch};
use crate::threshold::{initial_threshold, scale_threshold, EmptySample};
use crate::types::{KOrder, LedgerRow, PartialK, PartitionTopology, SparseBatch, TopologyError};
use crate::workloads::GradientSource;

/// Gradient selection strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sparsifier {
    /// Partition-wise threshold selection with online threshold scaling.
    /// `dynamic: false` freezes the initial topology.
    ExDyna { dynamic: bool },
    /// Every worker takes its own top-k over the whole vector.
    TopK,
    /// A rotating leader takes the top-k of its own vector for everyone.
    CltK,
    /// Fixed threshold over the whole vector. `None` estimates it once from
    /// the first iteration and never changes it afterwards.
    HardThreshold { delta: Option<f64> },
}

impl Sparsifier {
    pub fn name(&self) -> &'static str {
        match self {
            Sparsifier::ExDyna { dynamic: true } => "exdyna",
            Sparsifier::ExDyna { dynamic: false } => "exdyna-static",
            Sparsifier::TopK => "topk",
            Sparsifier::CltK => "cltk",
            Sparsifier::HardThreshold { .. } => "hardthreshold",
        }
    }

    /// True when workers' selections are disjoint by construction.
    pub fn is_exclusive(&self) -> bool {
        matches!(self, Sparsifier::ExDyna { .. } | Sparsifier::CltK)
    }
}

impl fmt::Display for Sparsifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("source produces {source_len} gradients but the configuration has n_g = {n_g}")]
    SourceLength { source_len: usize, n_g: usize },
    #[error("initial model has {0} entries, expected n_g")]
    ModelLength(usize),
    #[error("replicas diverged at iteration {t}: {what}")]
    Divergence { t: usize, what: String },
    #[error("invariant violated at iteration {t}: {what}")]
    Invariant { t: usize, what: String },
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Length(#[from] LengthMismatch),
    #[error(transparent)]
    Threshold(#[from] EmptySample),
    #[error(transparent)]
    TopK(#[from] KOutOfRange),
}

/// One worker's replica of the training state.
#[derive(Debug, Clone)]
pub struct WorkerState<T> {
    pub rank: usize,
    /// Model replica.
    pub x: Vec<T>,
    /// Residual (unselected accumulated gradient).
    pub e: Vec<T>,
    /// Current threshold.
    pub delta: T,
    /// Counts gathered in the previous iteration, rank order.
    pub k_t: PartialK,
    pub topology: PartitionTopology,
    grad: Vec<T>,
    snapshot: Vec<T>,
}

/// Cumulative diagnostics over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub skipped_moves: u64,
    pub block_moves: u64,
    pub cap_hits: u64,
    pub duplicates: u64,
}

pub struct Engine<T: Scalar> {
    cfg: ValidConfig,
    sparsifier: Sparsifier,
    workers: Vec<WorkerState<T>>,
    t: usize,
    delta_ready: bool,
    verify: bool,
    diagnostics: Diagnostics,
}

struct Selection {
    indices: Vec<usize>,
    skipped: u64,
    moved: u64,
    capped: bool,
}

impl<T: Scalar> Engine<T> {
    /// Sets up `n` workers sharing the initial model `x0`.
    pub fn new(cfg: ValidConfig, sparsifier: Sparsifier, x0: Vec<T>) -> Result<Self, EngineError> {
        if x0.len() != cfg.n_g {
            return Err(EngineError::ModelLength(x0.len()));
        }
        let topology = build_topology(cfg.n_g, cfg.n_b, cfg.n, cfg.min_blk)?;
        let (delta, delta_ready) = match (sparsifier, cfg.delta_0) {
            (Sparsifier::HardThreshold { delta: Some(d) }, _) => (T::of(d), true),
            (Sparsifier::HardThreshold { delta: None }, Some(d)) => (T::of(d), true),
            (Sparsifier::ExDyna { .. }, Some(d)) => (T::of(d), true),
            (Sparsifier::ExDyna { .. } | Sparsifier::HardThreshold { .. }, None) => (T::zero(), false),
            (Sparsifier::TopK | Sparsifier::CltK, _) => (T::zero(), true),
        };
        let k_init = PartialK::uniform(cfg.k(), cfg.n);
        let workers = (0..cfg.n)
            .map(|rank| WorkerState {
                rank,
                x: x0.clone(),
                e: vec![T::zero(); cfg.n_g],
                delta,
                k_t: k_init.clone(),
                topology: topology.clone(),
                grad: vec![T::zero(); cfg.n_g],
                snapshot: Vec::new(),
            })
            .collect();
        Ok(Self {
            cfg,
            sparsifier,
            workers,
            t: 0,
            delta_ready,
            verify: true,
            diagnostics: Diagnostics::default(),
        })
    }

    /// Enables or disables the per-iteration invariant checks (on by default).
    pub fn with_verification(mut self, verify: bool) -> Self {
        self.verify = verify;
        self
    }

    pub fn config(&self) -> &ValidConfig {
        &self.cfg
    }

    pub fn sparsifier(&self) -> Sparsifier {
        self.sparsifier
    }

    pub fn workers(&self) -> &[WorkerState<T>] {
        &self.workers
    }

    /// Next iteration to execute.
    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Model held by every replica.
    pub fn model(&self) -> &[T] {
        &self.workers[0].x
    }

    /// Runs `iters` iterations, collecting the ledger.
    pub fn run(
        &mut self,
        source: &dyn GradientSource<T>,
        iters: usize,
    ) -> Result<Vec<LedgerRow>, EngineError> {
        (0..iters).map(|_| self.step(source)).collect()
    }

    /// Executes one iteration and returns its ledger row.
    pub fn step(&mut self, source: &dyn GradientSource<T>) -> Result<LedgerRow, EngineError> {
        let t = self.t;
        let n = self.cfg.n;
        let n_g = self.cfg.n_g;
        let k = self.cfg.k();
        if source.n_g() != n_g {
            return Err(EngineError::SourceLength { source_len: source.n_g(), n_g });
        }
        let eta = T::of(self.cfg.eta_at(t));

        // Gradient and error-feedback accumulation; `e` holds acc afterwards.
        self.workers.par_iter_mut().try_for_each(|w| {
            let WorkerState { rank, x, e, grad, .. } = w;
            source.gradient_into(t, *rank, x, grad);
            accumulate_into(e, eta, grad)
        })?;
        if self.verify {
            self.workers.par_iter_mut().for_each(|w| {
                w.snapshot.clear();
                w.snapshot.extend_from_slice(&w.e);
            });
        }

        if !self.delta_ready {
            // Rank 0 estimates the starting threshold from its first
            // accumulated vector and broadcasts it.
            let estimate = initial_threshold(&self.workers[0].e, self.cfg.density)?;
            for (w, d) in self.workers.iter_mut().zip(broadcast(&estimate, n)) {
                w.delta = d;
            }
            self.delta_ready = true;
        }
        let delta_used = self.workers[0].delta.as_f64();

        let (gather, skipped, moved, cap_hits, idle_workers) = match self.sparsifier {
            Sparsifier::CltK => {
                let accs: Vec<&[T]> = self.workers.iter().map(|w| w.e.as_slice()).collect();
                let (leader, idx) = cltk_select(&accs, t, k)?;
                let copies = broadcast(&idx, n);
                debug_assert!(copies.iter().all(|c| *c == idx));
                let mut counts = vec![0; n];
                counts[leader] = idx.len() as u64;
                let gather = GatherResult {
                    m_t: idx.len(),
                    c_t: 0,
                    f_t: 1.0,
                    duplicates: 0,
                    k_rank: PartialK::new(counts, KOrder::Rank),
                    idx_global: copies.into_iter().next().unwrap_or_default(),
                };
                (gather, 0, 0, 0, n - 1)
            }
            sparsifier => {
                let cfg = &self.cfg;
                let selections: Vec<Selection> = self
                    .workers
                    .par_iter_mut()
                    .map(|w| select_for_worker(sparsifier, cfg, t, w))
                    .collect::<Result<_, _>>()?;
                let mut batches: Vec<SparseBatch<T>> = Vec::with_capacity(n);
                let (mut skipped, mut moved, mut cap_hits) = (0, 0, 0);
                for (w, s) in self.workers.iter().zip(selections) {
                    skipped += s.skipped;
                    moved += s.moved;
                    cap_hits += usize::from(s.capped);
                    batches.push(SparseBatch::from_indices(w.rank, s.indices, &w.e));
                }
                if self.verify {
                    for b in &batches {
                        if !b.is_well_formed(n_g) {
                            return Err(self.invariant(format!("malformed batch from rank {}", b.rank)));
                        }
                    }
                }
                (all_gather(&mut batches), skipped, moved, cap_hits, 0)
            }
        };
        // Rank 0 reports the replicated control counters.
        let skipped = skipped / n as u64;
        let moved = moved / n as u64;

        let idx = &gather.idx_global;
        let contributions: Vec<Vec<T>> =
            self.workers.par_iter().map(|w| idx.iter().map(|&j| w.e[j]).collect()).collect();
        let g = all_reduce_sum(&contributions)?;

        let k_prime = gather.k_prime();
        let total_selected = gather.total_selected() as usize;
        let n_t = T::of(n as f64);
        let (beta, gamma) = (self.cfg.beta, self.cfg.gamma);
        let adaptive = matches!(self.sparsifier, Sparsifier::ExDyna { .. });
        self.workers.par_iter_mut().for_each(|w| {
            if adaptive {
                w.delta = scale_threshold(k, total_selected, w.delta, beta, gamma);
            }
            w.k_t = gather.k_rank.clone();
            for (&j, &v) in idx.iter().zip(&g) {
                w.x[j] -= v / n_t;
            }
            clear_selected(&mut w.e, idx);
        });

        if self.verify {
            self.verify_iteration(&gather, &contributions)?;
        }

        let residuals: Vec<&[T]> = self.workers.iter().map(|w| w.e.as_slice()).collect();
        let row = LedgerRow {
            t,
            k_prime,
            density: k_prime as f64 / n_g as f64,
            eps: density_error(k, k_prime, n_g),
            m_t: gather.m_t,
            c_t: gather.c_t,
            f_t: gather.f_t,
            global_err: global_error(&residuals),
            delta: delta_used,
            loss: source.loss(&self.workers[0].x),
            k_rank: gather.k_rank.counts.clone(),
            duplicates: gather.duplicates,
            idle_workers,
            skipped_moves: skipped,
            cap_hits,
        };
        self.diagnostics.skipped_moves += skipped;
        self.diagnostics.block_moves += moved;
        self.diagnostics.cap_hits += cap_hits as u64;
        self.diagnostics.duplicates += gather.duplicates;
        self.t += 1;
        Ok(row)
    }

    fn invariant(&self, what: String) -> EngineError {
        EngineError::Invariant { t: self.t, what }
    }

    fn verify_iteration(
        &self,
        gather: &GatherResult,
        contributions: &[Vec<T>],
    ) -> Result<(), EngineError> {
        let t = self.t;
        let n = self.cfg.n;
        let idx = &gather.idx_global;

        // Error-feedback conservation: acc = e_next + contribution on idx.
        for (w, contrib) in self.workers.iter().zip(contributions) {
            let acc = &w.snapshot;
            let mut selected = idx.iter().zip(contrib).peekable();
            for (j, (&a, &r)) in acc.iter().zip(&w.e).enumerate() {
                let ok = match selected.peek() {
                    Some(&(&s, &c)) if s == j => {
                        selected.next();
                        r.bit_eq(T::zero()) && c.bit_eq(a)
                    }
                    _ => r.bit_eq(a),
                };
                if !ok {
                    return Err(self.invariant(format!(
                        "error feedback not conserved at rank {} index {j}",
                        w.rank
                    )));
                }
            }
        }

        // Traffic identities.
        let counts = &gather.k_rank.counts;
        let max = counts.iter().copied().max().unwrap_or(0) as usize;
        let total: u64 = counts.iter().sum();
        if gather.m_t != max {
            return Err(self.invariant(format!("m_t = {} but max k_rank = {max}", gather.m_t)));
        }
        if total != idx.len() as u64 + gather.duplicates {
            return Err(self.invariant("selected total != union + duplicates".into()));
        }
        if self.sparsifier != Sparsifier::CltK {
            let c_t = n as u64 * counts.iter().map(|&c| max as u64 - c).sum::<u64>();
            if gather.c_t != c_t {
                return Err(self.invariant(format!("C_t = {} but expected {c_t}", gather.c_t)));
            }
            if total > 0 {
                let f_t = (n * max) as f64 / total as f64;
                if gather.f_t != f_t || f_t < 1.0 {
                    return Err(self.invariant(format!("f_t = {} but expected {f_t}", gather.f_t)));
                }
                let balanced = counts.iter().all(|&c| c == counts[0]);
                if balanced != (f_t == 1.0) {
                    return Err(self.invariant("f_t = 1 must coincide with equal counts".into()));
                }
            }
        }
        if self.sparsifier.is_exclusive() && gather.duplicates != 0 {
            return Err(self.invariant(format!("{} duplicate selections", gather.duplicates)));
        }

        // Topology structure.
        for w in &self.workers {
            w.topology.check(self.cfg.n_b, self.cfg.min_blk)?;
        }

        // Replication.
        let lead = &self.workers[0];
        for w in &self.workers[1..] {
            if !slices_bit_eq(&w.x, &lead.x) {
                return Err(EngineError::Divergence { t, what: format!("model at rank {}", w.rank) });
            }
            if !w.delta.bit_eq(lead.delta) {
                return Err(EngineError::Divergence { t, what: format!("threshold at rank {}", w.rank) });
            }
            if w.topology != lead.topology {
                return Err(EngineError::Divergence { t, what: format!("topology at rank {}", w.rank) });
            }
            if w.k_t != lead.k_t {
                return Err(EngineError::Divergence { t, what: format!("partial-k at rank {}", w.rank) });
            }
        }
        Ok(())
    }
}

fn select_for_worker<T: Scalar>(
    sparsifier: Sparsifier,
    cfg: &ValidConfig,
    t: usize,
    w: &mut WorkerState<T>,
) -> Result<Selection, EngineError> {
    let mut out = Selection { indices: Vec::new(), skipped: 0, moved: 0, capped: false };
    match sparsifier {
        Sparsifier::ExDyna { dynamic } => {
            if dynamic {
                let k_part = rotate_to_partition_order(&w.k_t, t);
                let params =
                    AdjustParams { alpha: cfg.alpha, blk_move: cfg.blk_move, min_blk: cfg.min_blk };
                let adj = adjust_topology(&w.topology, &k_part, params);
                w.topology = adj.topology;
                out.skipped = adj.skipped;
                out.moved = adj.moved;
            }
            let range = allocate_partition(&w.topology, t, w.rank);
            out.indices = select_indices(&w.e, range, w.delta);
            if let Some(cap) = cfg.max_density_cap {
                let limit = ((cap * cfg.n_g as f64 / cfg.n as f64).floor() as usize).max(1);
                out.capped = cap_selection(&w.e, &mut out.indices, limit);
            }
        }
        Sparsifier::TopK => out.indices = topk_select(&w.e, cfg.k())?,
        Sparsifier::HardThreshold { .. } => out.indices = hard_threshold_select(&w.e, w.delta),
        Sparsifier::CltK => unreachable!("CLT-k selects on the leader only"),
    }
    Ok(out)
}

/// Dense data-parallel SGD: `x ← x − (1/n) Σ_i η·G_i(x)`, reduced in rank
/// order with the same arithmetic as the sparsified path.
pub struct DenseSgd<T: Scalar> {
    cfg: ValidConfig,
    x: Vec<T>,
    t: usize,
}

impl<T: Scalar> DenseSgd<T> {
    pub fn new(cfg: ValidConfig, x0: Vec<T>) -> Self {
        Self { cfg, x: x0, t: 0 }
    }

    pub fn model(&self) -> &[T] {
        &self.x
    }

    /// One iteration; returns the loss after the update, if the source has one.
    pub fn step(&mut self, source: &dyn GradientSource<T>) -> Result<Option<f64>, EngineError> {
        let n_g = self.x.len();
        let eta = T::of(self.cfg.eta_at(self.t));
        let x = &self.x;
        let t = self.t;
        let accs: Vec<Vec<T>> = (0..self.cfg.n)
            .into_par_iter()
            .map(|rank| {
                let mut grad = vec![T::zero(); n_g];
                source.gradient_into(t, rank, x, &mut grad);
                let mut acc = vec![T::zero(); n_g];
                accumulate_into(&mut acc, eta, &grad).map(|_| acc)
            })
            .collect::<Result<_, _>>()?;
        let g = all_reduce_sum(&accs)?;
        let n_t = T::of(self.cfg.n as f64);
        for (xj, &v) in self.x.iter_mut().zip(&g) {
            *xj -= v / n_t;
        }
        self.t += 1;
        Ok(source.loss(&self.x))
    }

    pub fn run(
        &mut self,
        source: &dyn GradientSource<T>,
        iters: usize,
    ) -> Result<Vec<Option<f64>>, EngineError> {
        (0..iters).map(|_| self.step(source)).collect()
    }
}
