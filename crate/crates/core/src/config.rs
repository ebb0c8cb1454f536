//! Sparsifier configuration and its validation.

use thiserror::Error;

/// Violated configuration invariant. The message names the invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("worker count must be >= 1")]
    NoWorkers,
    #[error("gradient count must be >= 1")]
    NoGradients,
    #[error("block count must be >= 1")]
    NoBlocks,
    #[error("density out of range: {0} not in (0, 1]")]
    DensityOutOfRange(f64),
    #[error("n_b < n·min_blk ({n_b} < {n}·{min_blk})")]
    TooFewBlocks { n_b: usize, n: usize, min_blk: usize },
    #[error("n_b > n_g ({n_b} > {n_g}): blocks would be empty")]
    BlocksExceedGradients { n_b: usize, n_g: usize },
    #[error("k < n ({k} < {n}): every partition needs a target share of at least one gradient")]
    TargetBelowWorkers { k: usize, n: usize },
    #[error("initial threshold must be > 0, got {0}")]
    NonPositiveThreshold(f64),
    #[error("alpha must be > 1, got {0}")]
    AlphaOutOfRange(f64),
    #[error("beta must be > 1, got {0}")]
    BetaOutOfRange(f64),
    #[error("gamma must be in (0, 1), got {0}")]
    GammaOutOfRange(f64),
    #[error("blk_move must be >= 1")]
    NoBlockMove,
    #[error("min_blk must be >= 1")]
    NoMinBlock,
    #[error("learning rate must be > 0, got {0}")]
    LearningRateOutOfRange(f64),
    #[error("learning-rate step factor must be > 0, got {0}")]
    LearningRateStepOutOfRange(f64),
    #[error("max density cap out of range: {0} not in (0, 1]")]
    CapOutOfRange(f64),
}

/// Step decay of the learning rate: from iteration `at` on, η is multiplied
/// by `factor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaStep {
    pub at: usize,
    pub factor: f64,
}

/// Raw sparsifier parameters as supplied by the user.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsifierConfig {
    /// Worker count.
    pub n: usize,
    /// Model gradient count.
    pub n_g: usize,
    /// Block count.
    pub n_b: usize,
    /// Target density.
    pub density: f64,
    /// Initial threshold. `None` estimates it from the first iteration.
    pub delta_0: Option<f64>,
    /// Imbalance trigger ratio.
    pub alpha: f64,
    /// Density band ratio.
    pub beta: f64,
    /// Threshold scaling step.
    pub gamma: f64,
    /// Blocks moved per adjustment.
    pub blk_move: usize,
    /// Minimum blocks per partition.
    pub min_blk: usize,
    /// Learning rate.
    pub eta: f64,
    pub eta_step: Option<EtaStep>,
    pub seed: u64,
    /// Optional ceiling on a partition's selection, as a density. Disabled
    /// by default.
    pub max_density_cap: Option<f64>,
}

impl Default for SparsifierConfig {
    fn default() -> Self {
        let n = 8;
        Self {
            n,
            n_g: 1 << 20,
            n_b: default_blocks(n),
            density: 0.001,
            delta_0: None,
            alpha: 1.25,
            beta: 2.0,
            gamma: 0.01,
            blk_move: 1,
            min_blk: 2,
            eta: 1.0,
            eta_step: None,
            seed: 0,
            max_density_cap: None,
        }
    }
}

/// Default block count for `n` workers.
pub fn default_blocks(n: usize) -> usize {
    64 * n
}

impl SparsifierConfig {
    /// Checks every invariant and fixes the target count `k = round(d·n_g)`.
    pub fn validate(&self) -> Result<ValidConfig, ConfigError> {
        if self.n < 1 {
            return Err(ConfigError::NoWorkers);
        }
        if self.n_g < 1 {
            return Err(ConfigError::NoGradients);
        }
        if self.n_b < 1 {
            return Err(ConfigError::NoBlocks);
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(ConfigError::DensityOutOfRange(self.density));
        }
        if self.min_blk < 1 {
            return Err(ConfigError::NoMinBlock);
        }
        if self.n_b < self.n * self.min_blk {
            return Err(ConfigError::TooFewBlocks {
                n_b: self.n_b,
                n: self.n,
                min_blk: self.min_blk,
            });
        }
        if self.n_b > self.n_g {
            return Err(ConfigError::BlocksExceedGradients { n_b: self.n_b, n_g: self.n_g });
        }
        let k = (self.density * self.n_g as f64).round() as usize;
        if k < self.n {
            return Err(ConfigError::TargetBelowWorkers { k, n: self.n });
        }
        if let Some(d0) = self.delta_0 {
            if !(d0 > 0.0 && d0.is_finite()) {
                return Err(ConfigError::NonPositiveThreshold(d0));
            }
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(ConfigError::AlphaOutOfRange(self.alpha));
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(ConfigError::BetaOutOfRange(self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::GammaOutOfRange(self.gamma));
        }
        if self.blk_move < 1 {
            return Err(ConfigError::NoBlockMove);
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(ConfigError::LearningRateOutOfRange(self.eta));
        }
        if let Some(step) = self.eta_step {
            if !(step.factor > 0.0 && step.factor.is_finite()) {
                return Err(ConfigError::LearningRateStepOutOfRange(step.factor));
            }
        }
        if let Some(cap) = self.max_density_cap {
            if !(cap > 0.0 && cap <= 1.0) {
                return Err(ConfigError::CapOutOfRange(cap));
            }
        }
        Ok(ValidConfig { raw: self.clone(), k })
    }
}

/// A configuration that passed [`SparsifierConfig::validate`], together with
/// the target count `k` fixed at validation time.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidConfig {
    raw: SparsifierConfig,
    k: usize,
}

impl ValidConfig {
    /// Target selected-gradient count per iteration.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn raw(&self) -> &SparsifierConfig {
        &self.raw
    }

    /// Learning rate in effect at iteration `t`.
    pub fn eta_at(&self, t: usize) -> f64 {
        match self.raw.eta_step {
            Some(step) if t >= step.at => self.raw.eta * step.factor,
            _ => self.raw.eta,
        }
    }
}

impl std::ops::Deref for ValidConfig {
    type Target = SparsifierConfig;

    fn deref(&self) -> &SparsifierConfig {
        &self.raw
    }
}

/// Mathematical (non-negative) remainder of `a` by `n`.
pub fn modulo(a: i64, n: usize) -> usize {
    a.rem_euclid(n as i64) as usize
}
