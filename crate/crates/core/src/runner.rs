//! Experiment description, execution and reporting shared by the command
//! line front end and the test suites.
//!
//! A [`RunConfig`] is a flat set of named settings. It is read from
//! `key = value` text (one setting per line, `#` starts a comment), can be
//! overridden key by key, and is written back in the same format so the
//! effective configuration of every run can be echoed verbatim.

use std::fmt::{self, Write as _};
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::config::{default_blocks, ConfigError, EtaStep, SparsifierConfig, ValidConfig};
use crate::engine::{Diagnostics, Engine, EngineError, Sparsifier};
use crate::metrics::mean;
use crate::partition::block_size;
use crate::scalar::Scalar;
use crate::types::LedgerRow;
use crate::workloads::{
    DecayStep, Distribution, GradientSource, StreamSpec, Task, TaskKind, TaskSpec, WorkloadError,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown setting `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("invalid workload: {0}")]
    Workload(#[from] WorkloadError),
    #[error("workload length {workload} differs from gradients = {gradients}")]
    WorkloadLength { workload: usize, gradients: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Named sparsifier as accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparsifierName {
    ExDyna,
    ExDynaStatic,
    TopK,
    CltK,
    HardThreshold,
}

impl SparsifierName {
    pub const ALL: [SparsifierName; 5] = [
        SparsifierName::ExDyna,
        SparsifierName::ExDynaStatic,
        SparsifierName::TopK,
        SparsifierName::CltK,
        SparsifierName::HardThreshold,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SparsifierName::ExDyna => "exdyna",
            SparsifierName::ExDynaStatic => "exdyna-static",
            SparsifierName::TopK => "topk",
            SparsifierName::CltK => "cltk",
            SparsifierName::HardThreshold => "hardthreshold",
        }
    }
}

impl fmt::Display for SparsifierName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SparsifierName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("expected one of {}", names(&Self::ALL)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workload {
    Synthetic,
    Quadratic,
    Logistic,
}

impl Workload {
    const ALL: [Workload; 3] = [Workload::Synthetic, Workload::Quadratic, Workload::Logistic];

    pub fn as_str(self) -> &'static str {
        match self {
            Workload::Synthetic => "synthetic",
            Workload::Quadratic => "quadratic",
            Workload::Logistic => "logistic",
        }
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Workload {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| format!("expected one of {}", names(&Self::ALL)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err("expected f32 or f64".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueDistribution {
    Laplace,
    LogNormal,
}

impl fmt::Display for ValueDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueDistribution::Laplace => "laplace",
            ValueDistribution::LogNormal => "lognormal",
        })
    }
}

impl FromStr for ValueDistribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "laplace" => Ok(ValueDistribution::Laplace),
            "lognormal" => Ok(ValueDistribution::LogNormal),
            _ => Err("expected laplace or lognormal".into()),
        }
    }
}

fn names<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("|")
}

/// Every setting of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sparsifier: SparsifierName,
    pub static_partitions: bool,
    pub fixed_delta: Option<f64>,
    pub iters: usize,
    pub workers: usize,
    pub gradients: usize,
    pub density: f64,
    /// `None` means `64 · workers`.
    pub blocks: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub blk_move: usize,
    pub min_blk: usize,
    pub delta0: Option<f64>,
    pub eta: f64,
    pub eta_step_at: Option<usize>,
    pub eta_step_factor: f64,
    pub max_density_cap: Option<f64>,
    pub seed: u64,
    pub precision: Precision,
    pub verify: bool,
    pub workload: Workload,
    /// Segment scales of the synthetic stream; the gradient vector is split
    /// into equal segments, one per scale.
    pub scales: Vec<f64>,
    pub distribution: ValueDistribution,
    pub sigma: f64,
    pub decay: f64,
    pub decay_step_at: Option<usize>,
    pub decay_step_factor: f64,
    pub condition: f64,
    pub noise: f64,
    pub samples: usize,
    pub nnz: usize,
    pub batch: usize,
    pub skew: f64,
    pub l2: f64,
    pub label_noise: f64,
}

/// Default synthetic stream: eight equal segments alternating between scale
/// 1 and 1/4.
pub const DEFAULT_SCALES: [f64; 8] = [1.0, 0.25, 1.0, 0.25, 1.0, 0.25, 1.0, 0.25];

impl Default for RunConfig {
    fn default() -> Self {
        let s = SparsifierConfig::default();
        Self {
            sparsifier: SparsifierName::ExDyna,
            static_partitions: false,
            fixed_delta: None,
            iters: 1000,
            workers: s.n,
            gradients: 1 << 20,
            density: s.density,
            blocks: None,
            alpha: s.alpha,
            beta: s.beta,
            gamma: s.gamma,
            blk_move: s.blk_move,
            min_blk: s.min_blk,
            delta0: None,
            eta: s.eta,
            eta_step_at: None,
            eta_step_factor: 0.1,
            max_density_cap: None,
            seed: 0,
            precision: Precision::F64,
            verify: true,
            workload: Workload::Synthetic,
            scales: DEFAULT_SCALES.to_vec(),
            distribution: ValueDistribution::Laplace,
            sigma: 1.0,
            decay: 1.0,
            decay_step_at: None,
            decay_step_factor: 0.1,
            condition: 10.0,
            noise: 0.0,
            samples: 4096,
            nnz: 16,
            batch: 32,
            skew: 2.0,
            l2: 1e-4,
            label_noise: 0.05,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V, RunError>
where
    V::Err: fmt::Display,
{
    value.parse().map_err(|e: V::Err| RunError::BadValue {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

fn parse_opt<V: FromStr>(key: &str, value: &str) -> Result<Option<V>, RunError>
where
    V::Err: fmt::Display,
{
    if value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, RunError> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn opt<V: fmt::Display>(v: &Option<V>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// Splits `key = value` text into pairs. Blank lines and `#` comments are
/// skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, RunError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(RunError::Syntax { line: i + 1, text: raw.to_string() });
        };
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    /// Defaults overridden by the settings in `text`.
    pub fn from_text(text: &str) -> Result<Self, RunError> {
        let mut cfg = Self::default();
        for (k, v) in parse_pairs(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Sets one named setting. Keys use the command-line spelling
    /// (`blk-move`); underscores are accepted too.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), RunError> {
        let key = key.replace('_', "-");
        let k = key.as_str();
        match k {
            "sparsifier" => self.sparsifier = parse(k, value)?,
            "static-partitions" => self.static_partitions = parse(k, value)?,
            "fixed-delta" => self.fixed_delta = parse_opt(k, value)?,
            "iters" => self.iters = parse(k, value)?,
            "workers" => self.workers = parse(k, value)?,
            "gradients" => self.gradients = parse(k, value)?,
            "density" => self.density = parse(k, value)?,
            "blocks" => self.blocks = parse_opt(k, value)?,
            "alpha" => self.alpha = parse(k, value)?,
            "beta" => self.beta = parse(k, value)?,
            "gamma" => self.gamma = parse(k, value)?,
            "blk-move" => self.blk_move = parse(k, value)?,
            "min-blk" => self.min_blk = parse(k, value)?,
            "delta0" => self.delta0 = parse_opt(k, value)?,
            "eta" => self.eta = parse(k, value)?,
            "eta-step-at" => self.eta_step_at = parse_opt(k, value)?,
            "eta-step-factor" => self.eta_step_factor = parse(k, value)?,
            "max-density-cap" => self.max_density_cap = parse_opt(k, value)?,
            "seed" => self.seed = parse(k, value)?,
            "precision" => self.precision = parse(k, value)?,
            "verify" => self.verify = parse(k, value)?,
            "workload" => self.workload = parse(k, value)?,
            "scales" => self.scales = parse_list(k, value)?,
            "distribution" => self.distribution = parse(k, value)?,
            "sigma" => self.sigma = parse(k, value)?,
            "decay" => self.decay = parse(k, value)?,
            "decay-step-at" => self.decay_step_at = parse_opt(k, value)?,
            "decay-step-factor" => self.decay_step_factor = parse(k, value)?,
            "condition" => self.condition = parse(k, value)?,
            "noise" => self.noise = parse(k, value)?,
            "samples" => self.samples = parse(k, value)?,
            "nnz" => self.nnz = parse(k, value)?,
            "batch" => self.batch = parse(k, value)?,
            "skew" => self.skew = parse(k, value)?,
            "l2" => self.l2 = parse(k, value)?,
            "label-noise" => self.label_noise = parse(k, value)?,
            _ => return Err(RunError::UnknownKey(key)),
        }
        Ok(())
    }

    /// Every setting as `key = value` lines, readable by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let scales = self.scales.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
        let lines: Vec<(&str, String)> = vec![
            ("sparsifier", self.sparsifier.to_string()),
            ("static-partitions", self.static_partitions.to_string()),
            ("fixed-delta", opt(&self.fixed_delta)),
            ("iters", self.iters.to_string()),
            ("workers", self.workers.to_string()),
            ("gradients", self.gradients.to_string()),
            ("density", self.density.to_string()),
            ("blocks", opt(&self.blocks)),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("gamma", self.gamma.to_string()),
            ("blk-move", self.blk_move.to_string()),
            ("min-blk", self.min_blk.to_string()),
            ("delta0", opt(&self.delta0)),
            ("eta", self.eta.to_string()),
            ("eta-step-at", opt(&self.eta_step_at)),
            ("eta-step-factor", self.eta_step_factor.to_string()),
            ("max-density-cap", opt(&self.max_density_cap)),
            ("seed", self.seed.to_string()),
            ("precision", self.precision.to_string()),
            ("verify", self.verify.to_string()),
            ("workload", self.workload.to_string()),
            ("scales", scales),
            ("distribution", self.distribution.to_string()),
            ("sigma", self.sigma.to_string()),
            ("decay", self.decay.to_string()),
            ("decay-step-at", opt(&self.decay_step_at)),
            ("decay-step-factor", self.decay_step_factor.to_string()),
            ("condition", self.condition.to_string()),
            ("noise", self.noise.to_string()),
            ("samples", self.samples.to_string()),
            ("nnz", self.nnz.to_string()),
            ("batch", self.batch.to_string()),
            ("skew", self.skew.to_string()),
            ("l2", self.l2.to_string()),
            ("label-noise", self.label_noise.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn effective_blocks(&self) -> usize {
        self.blocks.unwrap_or_else(|| default_blocks(self.workers))
    }

    pub fn sparsifier_config(&self) -> SparsifierConfig {
        SparsifierConfig {
            n: self.workers,
            n_g: self.gradients,
            n_b: self.effective_blocks(),
            density: self.density,
            delta_0: self.delta0,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            blk_move: self.blk_move,
            min_blk: self.min_blk,
            eta: self.eta,
            eta_step: self.eta_step_at.map(|at| EtaStep { at, factor: self.eta_step_factor }),
            seed: self.seed,
            max_density_cap: self.max_density_cap,
        }
    }

    pub fn engine_sparsifier(&self) -> Sparsifier {
        match self.sparsifier {
            SparsifierName::ExDyna => Sparsifier::ExDyna { dynamic: !self.static_partitions },
            SparsifierName::ExDynaStatic => Sparsifier::ExDyna { dynamic: false },
            SparsifierName::TopK => Sparsifier::TopK,
            SparsifierName::CltK => Sparsifier::CltK,
            SparsifierName::HardThreshold => Sparsifier::HardThreshold { delta: self.fixed_delta },
        }
    }

    pub fn stream(&self) -> StreamSpec {
        StreamSpec {
            segments: StreamSpec::equal_segments(self.gradients, &self.scales),
            distribution: match self.distribution {
                ValueDistribution::Laplace => Distribution::Laplace,
                ValueDistribution::LogNormal => Distribution::LogNormal { sigma: self.sigma },
            },
            decay: self.decay,
            decay_step: self
                .decay_step_at
                .map(|at| DecayStep { at, factor: self.decay_step_factor }),
            seed: self.seed,
        }
    }

    pub fn task(&self) -> TaskSpec {
        let kind = match self.workload {
            Workload::Logistic => TaskKind::Logistic {
                samples: self.samples,
                nnz: self.nnz,
                batch: self.batch,
                skew: self.skew,
                l2: self.l2,
                label_noise: self.label_noise,
            },
            _ => TaskKind::Quadratic { condition: self.condition, noise: self.noise },
        };
        TaskSpec { kind, dimension: self.gradients, seed: self.seed }
    }

    /// Validates every setting and materialises the gradient source.
    pub fn prepare(&self) -> Result<(ValidConfig, Source), RunError> {
        let cfg = self.sparsifier_config().validate()?;
        if self.iters == 0 {
            return Err(RunError::BadValue {
                key: "iters".into(),
                value: "0".into(),
                reason: "must be >= 1".into(),
            });
        }
        let source = match self.workload {
            Workload::Synthetic => {
                if self.scales.len() > self.gradients {
                    return Err(WorkloadError::EmptySegment(self.gradients).into());
                }
                let s = self.stream();
                s.validate()?;
                Source::Stream(s)
            }
            Workload::Quadratic | Workload::Logistic => Source::Task(self.task().build()?),
        };
        let len = match &source {
            Source::Stream(s) => s.n_g(),
            Source::Task(t) => t.spec().dimension,
        };
        if len != self.gradients {
            return Err(RunError::WorkloadLength { workload: len, gradients: self.gradients });
        }
        Ok((cfg, source))
    }

    /// Notes about settings that are accepted but unusual.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let n_b = self.effective_blocks();
        if n_b > 0 && self.gradients >= n_b {
            let (sz, aligned) = block_size(self.gradients, n_b);
            if !aligned {
                w.push(format!(
                    "block size {sz} is below 32; blocks are not 32-aligned"
                ));
            }
        }
        if self.static_partitions && self.sparsifier != SparsifierName::ExDyna {
            w.push(format!("static-partitions has no effect on {}", self.sparsifier));
        }
        if self.fixed_delta.is_some() && self.sparsifier != SparsifierName::HardThreshold {
            w.push(format!("fixed-delta has no effect on {}", self.sparsifier));
        }
        w
    }

    /// Runs the experiment at the configured precision.
    pub fn execute(&self) -> Result<RunOutput, RunError> {
        let (cfg, source) = self.prepare()?;
        let sparsifier = self.engine_sparsifier();
        let (rows, diagnostics) = match self.precision {
            Precision::F64 => drive::<f64>(cfg, sparsifier, &source, self.iters, self.verify)?,
            Precision::F32 => drive::<f32>(cfg, sparsifier, &source, self.iters, self.verify)?,
        };
        Ok(RunOutput { config: self.clone(), rows, diagnostics, warnings: self.warnings() })
    }
}

/// Gradient source of a prepared run.
#[derive(Debug)]
pub enum Source {
    Stream(StreamSpec),
    Task(Task),
}

impl Source {
    fn as_dyn<T: Scalar>(&self) -> &dyn GradientSource<T> {
        match self {
            Source::Stream(s) => s,
            Source::Task(t) => t,
        }
    }
}

fn drive<T: Scalar>(
    cfg: ValidConfig,
    sparsifier: Sparsifier,
    source: &Source,
    iters: usize,
    verify: bool,
) -> Result<(Vec<LedgerRow>, Diagnostics), RunError> {
    let src = source.as_dyn::<T>();
    let mut engine = Engine::new(cfg, sparsifier, src.initial_model())?.with_verification(verify);
    let rows = engine.run(src, iters)?;
    Ok((rows, engine.diagnostics().clone()))
}

/// Writes the ledger as CSV: header row, then one newline-terminated line
/// per iteration.
pub fn write_csv<W: Write>(rows: &[LedgerRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", LedgerRow::CSV_HEADER)?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    out.flush()
}

/// Aggregates of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub mean_density: f64,
    pub mean_f: f64,
    pub max_f: f64,
    pub duplicates: u64,
    pub final_delta: f64,
    pub final_loss: Option<f64>,
}

impl RunStats {
    pub fn of(rows: &[LedgerRow]) -> Self {
        let density: Vec<f64> = rows.iter().map(|r| r.density).collect();
        let f: Vec<f64> = rows.iter().map(|r| r.f_t).collect();
        Self {
            mean_density: mean(&density),
            mean_f: mean(&f),
            max_f: f.iter().copied().fold(f64::NAN, f64::max),
            duplicates: rows.iter().map(|r| r.duplicates).sum(),
            final_delta: rows.last().map_or(f64::NAN, |r| r.delta),
            final_loss: rows.last().and_then(|r| r.loss),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub rows: Vec<LedgerRow>,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn stats(&self) -> RunStats {
        RunStats::of(&self.rows)
    }

    /// Human-readable summary: effective configuration, schema version,
    /// warnings and aggregates.
    pub fn summary(&self) -> String {
        let s = self.stats();
        let d = &self.diagnostics;
        let mut out = String::new();
        let _ = writeln!(out, "# effective configuration");
        out.push_str(&self.config.to_text());
        let _ = writeln!(out, "\n# output");
        let _ = writeln!(out, "csv_schema = {}", LedgerRow::CSV_VERSION);
        let _ = writeln!(out, "csv_columns = {}", LedgerRow::CSV_HEADER);
        let _ = writeln!(out, "rows = {}", self.rows.len());
        for w in &self.warnings {
            let _ = writeln!(out, "warning = {w}");
        }
        let _ = writeln!(out, "\n# results");
        let _ = writeln!(out, "target_density = {}", self.config.density);
        let _ = writeln!(out, "mean_density = {}", s.mean_density);
        let _ = writeln!(out, "mean_f = {}", s.mean_f);
        let _ = writeln!(out, "max_f = {}", s.max_f);
        let _ = writeln!(out, "duplicates = {}", s.duplicates);
        let _ = writeln!(out, "final_delta = {}", s.final_delta);
        if let Some(l) = s.final_loss {
            let _ = writeln!(out, "final_loss = {l}");
        }
        let _ = writeln!(out, "block_moves = {}", d.block_moves);
        let _ = writeln!(out, "skipped_moves = {}", d.skipped_moves);
        let _ = writeln!(out, "cap_hits = {}", d.cap_hits);
        out
    }
}

/// Runs each named sparsifier on the same configuration and seed.
pub fn compare(base: &RunConfig, sparsifiers: &[SparsifierName]) -> Result<Vec<RunOutput>, RunError> {
    if sparsifiers.len() < 2 {
        return Err(RunError::Usage(format!(
            "compare needs at least two sparsifiers, got {}",
            sparsifiers.len()
        )));
    }
    sparsifiers
        .iter()
        .map(|&name| RunConfig { sparsifier: name, ..base.clone() }.execute())
        .collect()
}

/// Fixed-width table of a comparison.
pub fn format_comparison(runs: &[RunOutput]) -> String {
    let mut out = format!(
        "{:<14} {:>14} {:>10} {:>10} {:>12}\n",
        "sparsifier", "mean_density", "d'/d", "mean_f", "duplicates"
    );
    for r in runs {
        let s = r.stats();
        let _ = writeln!(
            out,
            "{:<14} {:>14.6e} {:>10.3} {:>10.3} {:>12}",
            r.config.sparsifier.as_str(),
            s.mean_density,
            s.mean_density / r.config.density,
            s.mean_f,
            s.duplicates
        );
    }
    out
}
