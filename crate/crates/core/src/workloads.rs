//! Deterministic gradient sources.
//!
//! Every random draw comes from a ChaCha8 stream keyed by
//! `(seed, purpose, t, rank, lane)`, so a gradient depends only on its key,
//! never on evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use thiserror::Error;

use crate::scalar::Scalar;

/// Largest rank / lane that fits the stream key layout.
pub const MAX_KEY_FIELD: usize = 1 << 12;

const PURPOSE_STREAM: u64 = 0x5354_5245_414d;
const PURPOSE_TASK_DATA: u64 = 0x4441_5441;
const PURPOSE_MINIBATCH: u64 = 0x0042_4154_4348;
const PURPOSE_NOISE: u64 = 0x004e_4f49_5345;

/// Independent random stream for one `(t, rank, lane)` key.
pub fn stream_rng(seed: u64, purpose: u64, t: usize, rank: usize, lane: usize) -> ChaCha8Rng {
    debug_assert!(rank < MAX_KEY_FIELD && lane < MAX_KEY_FIELD);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.rotate_left(17));
    rng.set_stream(((t as u64) << 24) | ((rank as u64) << 12) | lane as u64);
    rng
}

/// A source of per-worker stochastic gradients.
pub trait GradientSource<T: Scalar>: Sync {
    /// Gradient vector length.
    fn n_g(&self) -> usize;

    /// Writes the gradient of `rank` at iteration `t`, evaluated at `x`.
    fn gradient_into(&self, t: usize, rank: usize, x: &[T], out: &mut [T]);

    /// Full objective at `x`, when the source has one.
    fn loss(&self, _x: &[T]) -> Option<f64> {
        None
    }

    /// Starting point of the model.
    fn initial_model(&self) -> Vec<T> {
        vec![T::zero(); self.n_g()]
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorkloadError {
    #[error("stream has no segments")]
    NoSegments,
    #[error("segment {0} is empty")]
    EmptySegment(usize),
    #[error("segment {index} scale must be > 0, got {scale}")]
    BadScale { index: usize, scale: f64 },
    #[error("too many segments: {0} (max {MAX_KEY_FIELD})")]
    TooManySegments(usize),
    #[error("decay must be in (0, 1], got {0}")]
    BadDecay(f64),
    #[error("decay step factor must be > 0, got {0}")]
    BadStepFactor(f64),
    #[error("log-normal sigma must be >= 0, got {0}")]
    BadSigma(f64),
    #[error("task dimension must be >= 1")]
    NoDimension,
    #[error("invalid task parameter: {0}")]
    BadTaskParameter(&'static str),
}

/// Contiguous run of gradients sharing a magnitude scale, standing in for one
/// layer of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub len: usize,
    pub scale: f64,
}

/// Value distribution of a synthetic stream; `scale` is the mean magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Laplace,
    /// Log-normal magnitude with a random sign.
    LogNormal { sigma: f64 },
}

/// Sudden drop of every segment's scale from iteration `at` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayStep {
    pub at: usize,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub segments: Vec<Segment>,
    pub distribution: Distribution,
    /// Per-iteration multiplicative scale decay.
    pub decay: f64,
    pub decay_step: Option<DecayStep>,
    pub seed: u64,
}

impl StreamSpec {
    /// Stationary Laplace stream over `segments`.
    pub fn laplace(segments: Vec<Segment>, seed: u64) -> Self {
        Self { segments, distribution: Distribution::Laplace, decay: 1.0, decay_step: None, seed }
    }

    /// Splits `n_g` into equal segments, one per scale; the last segment takes
    /// the remainder.
    pub fn equal_segments(n_g: usize, scales: &[f64]) -> Vec<Segment> {
        let each = n_g / scales.len();
        scales
            .iter()
            .enumerate()
            .map(|(i, &scale)| Segment {
                len: if i + 1 == scales.len() { n_g - each * i } else { each },
                scale,
            })
            .collect()
    }

    pub fn n_g(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.segments.is_empty() {
            return Err(WorkloadError::NoSegments);
        }
        if self.segments.len() > MAX_KEY_FIELD {
            return Err(WorkloadError::TooManySegments(self.segments.len()));
        }
        for (index, s) in self.segments.iter().enumerate() {
            if s.len == 0 {
                return Err(WorkloadError::EmptySegment(index));
            }
            if !(s.scale > 0.0 && s.scale.is_finite()) {
                return Err(WorkloadError::BadScale { index, scale: s.scale });
            }
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(WorkloadError::BadDecay(self.decay));
        }
        if let Some(step) = self.decay_step {
            if !(step.factor > 0.0 && step.factor.is_finite()) {
                return Err(WorkloadError::BadStepFactor(step.factor));
            }
        }
        if let Distribution::LogNormal { sigma } = self.distribution {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(WorkloadError::BadSigma(sigma));
            }
        }
        Ok(())
    }

    /// Multiplier applied to every segment scale at iteration `t`.
    pub fn scale_factor(&self, t: usize) -> f64 {
        let mut f = self.decay.powf(t as f64);
        if let Some(step) = self.decay_step {
            if t >= step.at {
                f *= step.factor;
            }
        }
        f
    }
}

/// Fills `out` with the synthetic gradient of `rank` at iteration `t`.
pub fn synthetic_gradient_into<T: Scalar>(spec: &StreamSpec, t: usize, rank: usize, out: &mut [T]) {
    assert_eq!(out.len(), spec.n_g(), "output length must equal the stream length");
    let factor = spec.scale_factor(t);
    let mut start = 0;
    for (lane, seg) in spec.segments.iter().enumerate() {
        let mut rng = stream_rng(spec.seed, PURPOSE_STREAM, t, rank, lane);
        let scale = seg.scale * factor;
        let chunk = &mut out[start..start + seg.len];
        start += seg.len;
        match spec.distribution {
            Distribution::Laplace => fill_signed(chunk, &mut rng, |rng| {
                let m: f64 = rng.sample(Exp1);
                scale * m
            }),
            Distribution::LogNormal { sigma } => {
                let mu = scale.ln() - 0.5 * sigma * sigma;
                fill_signed(chunk, &mut rng, |rng| {
                    let z: f64 = rng.sample(StandardNormal);
                    (mu + sigma * z).exp()
                })
            }
        }
    }
}

/// Allocating form of [`synthetic_gradient_into`].
pub fn synthetic_gradient<T: Scalar>(spec: &StreamSpec, t: usize, rank: usize) -> Vec<T> {
    let mut out = vec![T::zero(); spec.n_g()];
    synthetic_gradient_into(spec, t, rank, &mut out);
    out
}

fn fill_signed<T: Scalar>(
    chunk: &mut [T],
    rng: &mut ChaCha8Rng,
    mut magnitude: impl FnMut(&mut ChaCha8Rng) -> f64,
) {
    for block in chunk.chunks_mut(64) {
        let signs: u64 = rng.random();
        for (i, v) in block.iter_mut().enumerate() {
            // branchless sign
            let m = magnitude(rng).to_bits() | (((signs >> i) & 1) << 63);
            *v = T::of(f64::from_bits(m));
        }
    }
}

impl<T: Scalar> GradientSource<T> for StreamSpec {
    fn n_g(&self) -> usize {
        StreamSpec::n_g(self)
    }

    fn gradient_into(&self, t: usize, rank: usize, _x: &[T], out: &mut [T]) {
        synthetic_gradient_into(self, t, rank, out);
    }
}

/// Analytic optimisation task.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskKind {
    /// `½ Σ h_j (x_j − x*_j)²` with curvatures log-spaced in
    /// `[1/condition, 1]`, plus optional Gaussian gradient noise per worker.
    Quadratic { condition: f64, noise: f64 },
    /// L2-regularised logistic regression on a synthetic sparse dataset.
    /// Feature `j` of a row is drawn as `floor(dim · u^skew)`, so larger
    /// `skew` concentrates features (and gradient mass) on low indices.
    Logistic { samples: usize, nnz: usize, batch: usize, skew: f64, l2: f64, label_noise: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub dimension: usize,
    pub seed: u64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.dimension == 0 {
            return Err(WorkloadError::NoDimension);
        }
        match self.kind {
            TaskKind::Quadratic { condition, noise } => {
                if !(condition >= 1.0 && condition.is_finite()) {
                    return Err(WorkloadError::BadTaskParameter("condition must be >= 1"));
                }
                if !(noise >= 0.0 && noise.is_finite()) {
                    return Err(WorkloadError::BadTaskParameter("noise must be >= 0"));
                }
            }
            TaskKind::Logistic { samples, nnz, batch, skew, l2, label_noise } => {
                if samples == 0 || nnz == 0 || batch == 0 {
                    return Err(WorkloadError::BadTaskParameter(
                        "samples, nnz and batch must be >= 1",
                    ));
                }
                if !(skew >= 1.0 && skew.is_finite()) {
                    return Err(WorkloadError::BadTaskParameter("skew must be >= 1"));
                }
                if !(l2 >= 0.0 && l2.is_finite()) {
                    return Err(WorkloadError::BadTaskParameter("l2 must be >= 0"));
                }
                if !(0.0..=0.5).contains(&label_noise) {
                    return Err(WorkloadError::BadTaskParameter("label_noise must be in [0, 0.5]"));
                }
            }
        }
        Ok(())
    }

    /// Materialises the task's data.
    pub fn build(&self) -> Result<Task, WorkloadError> {
        self.validate()?;
        let dim = self.dimension;
        let mut rng = stream_rng(self.seed, PURPOSE_TASK_DATA, 0, 0, 0);
        let data = match self.kind {
            TaskKind::Quadratic { condition, .. } => {
                let curvature = (0..dim)
                    .map(|j| {
                        if dim == 1 {
                            1.0
                        } else {
                            condition.powf(-(j as f64) / (dim - 1) as f64)
                        }
                    })
                    .collect();
                let optimum = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                TaskData::Quadratic { curvature, optimum }
            }
            TaskKind::Logistic { samples, nnz, skew, label_noise, .. } => {
                let truth: Vec<f64> =
                    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let norm = (nnz as f64).sqrt();
                let mut rows = Vec::with_capacity(samples);
                let mut labels = Vec::with_capacity(samples);
                for _ in 0..samples {
                    let mut row: Vec<(usize, f64)> = (0..nnz)
                        .map(|_| {
                            let u: f64 = rng.random();
                            let j = ((dim as f64 * u.powf(skew)) as usize).min(dim - 1);
                            let v: f64 = rng.sample(StandardNormal);
                            (j, v / norm)
                        })
                        .collect();
                    row.sort_by_key(|&(j, _)| j);
                    row.dedup_by_key(|&mut (j, _)| j);
                    let margin: f64 = row.iter().map(|&(j, v)| truth[j] * v).sum();
                    let mut y = if margin >= 0.0 { 1.0 } else { -1.0 };
                    if rng.random::<f64>() < label_noise {
                        y = -y;
                    }
                    rows.push(row);
                    labels.push(y);
                }
                TaskData::Logistic { rows, labels }
            }
        };
        Ok(Task { spec: self.clone(), data })
    }
}

#[derive(Debug, Clone)]
enum TaskData {
    Quadratic { curvature: Vec<f64>, optimum: Vec<f64> },
    Logistic { rows: Vec<Vec<(usize, f64)>>, labels: Vec<f64> },
}

/// A materialised [`TaskSpec`].
#[derive(Debug, Clone)]
pub struct Task {
    spec: TaskSpec,
    data: TaskData,
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Task {
    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    /// Minimiser of the quadratic task; `None` for other tasks.
    pub fn optimum(&self) -> Option<&[f64]> {
        match &self.data {
            TaskData::Quadratic { optimum, .. } => Some(optimum),
            TaskData::Logistic { .. } => None,
        }
    }

    /// Sample indices of the minibatch drawn by `rank` at iteration `t`.
    pub fn minibatch(&self, t: usize, rank: usize) -> Vec<usize> {
        match (&self.spec.kind, &self.data) {
            (TaskKind::Logistic { batch, .. }, TaskData::Logistic { rows, .. }) => {
                let mut rng = stream_rng(self.spec.seed, PURPOSE_MINIBATCH, t, rank, 0);
                (0..*batch).map(|_| rng.random_range(0..rows.len())).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Exact gradient of the minibatch objective at `x`.
    pub fn batch_gradient(&self, x: &[f64], batch: &[usize], out: &mut [f64]) {
        match (&self.spec.kind, &self.data) {
            (TaskKind::Quadratic { .. }, TaskData::Quadratic { curvature, optimum }) => {
                for j in 0..out.len() {
                    out[j] = curvature[j] * (x[j] - optimum[j]);
                }
            }
            (TaskKind::Logistic { l2, .. }, TaskData::Logistic { rows, labels }) => {
                for (o, &xj) in out.iter_mut().zip(x) {
                    *o = l2 * xj;
                }
                let inv = 1.0 / batch.len() as f64;
                for &s in batch {
                    let y = labels[s];
                    let z: f64 = rows[s].iter().map(|&(j, v)| x[j] * v).sum();
                    let coef = -y * sigmoid(-y * z) * inv;
                    for &(j, v) in &rows[s] {
                        out[j] += coef * v;
                    }
                }
            }
            _ => unreachable!("task data always matches its kind"),
        }
    }

    /// Minibatch objective at `x`; the full objective when `batch` lists
    /// every sample once.
    pub fn batch_loss(&self, x: &[f64], batch: &[usize]) -> f64 {
        match (&self.spec.kind, &self.data) {
            (TaskKind::Quadratic { .. }, TaskData::Quadratic { curvature, optimum }) => {
                0.5 * (0..x.len()).map(|j| curvature[j] * (x[j] - optimum[j]).powi(2)).sum::<f64>()
            }
            (TaskKind::Logistic { l2, .. }, TaskData::Logistic { rows, labels }) => {
                let data: f64 = batch
                    .iter()
                    .map(|&s| {
                        let z: f64 = rows[s].iter().map(|&(j, v)| x[j] * v).sum();
                        softplus(-labels[s] * z)
                    })
                    .sum::<f64>()
                    / batch.len() as f64;
                data + 0.5 * l2 * x.iter().map(|v| v * v).sum::<f64>()
            }
            _ => unreachable!("task data always matches its kind"),
        }
    }

    /// Full-dataset objective.
    pub fn full_loss(&self, x: &[f64]) -> f64 {
        match &self.data {
            TaskData::Quadratic { .. } => self.batch_loss(x, &[]),
            TaskData::Logistic { rows, .. } => {
                let all: Vec<usize> = (0..rows.len()).collect();
                self.batch_loss(x, &all)
            }
        }
    }

    /// Stochastic gradient of `rank` at iteration `t`.
    pub fn task_gradient(&self, x: &[f64], t: usize, rank: usize, out: &mut [f64]) {
        let batch = self.minibatch(t, rank);
        self.batch_gradient(x, &batch, out);
        if let TaskKind::Quadratic { noise, .. } = self.spec.kind {
            if noise > 0.0 {
                let mut rng = stream_rng(self.spec.seed, PURPOSE_NOISE, t, rank, 0);
                for o in out.iter_mut() {
                    *o += noise * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
    }
}

impl<T: Scalar> GradientSource<T> for Task {
    fn n_g(&self) -> usize {
        self.spec.dimension
    }

    fn gradient_into(&self, t: usize, rank: usize, x: &[T], out: &mut [T]) {
        let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
        let mut g = vec![0.0; out.len()];
        self.task_gradient(&xf, t, rank, &mut g);
        for (o, v) in out.iter_mut().zip(g) {
            *o = T::of(v);
        }
    }

    fn loss(&self, x: &[T]) -> Option<f64> {
        let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
        Some(self.full_loss(&xf))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_segment(seed: u64) -> StreamSpec {
        StreamSpec::laplace(
            vec![Segment { len: 500, scale: 1.0 }, Segment { len: 300, scale: 4.0 }],
            seed,
        )
    }

    #[test]
    fn stream_is_deterministic() {
        let spec = two_segment(7);
        let a: Vec<f64> = synthetic_gradient(&spec, 3, 1);
        let b: Vec<f64> = synthetic_gradient(&spec, 3, 1);
        assert_eq!(a, b);
        let f: Vec<f32> = synthetic_gradient(&spec, 3, 1);
        assert!(a.iter().zip(&f).all(|(x, y)| (*x as f32).to_bits() == y.to_bits()));
    }

    #[test]
    fn keys_select_independent_streams() {
        let spec = two_segment(7);
        let base: Vec<f64> = synthetic_gradient(&spec, 3, 1);
        assert_ne!(base, synthetic_gradient::<f64>(&spec, 3, 0));
        assert_ne!(base, synthetic_gradient::<f64>(&spec, 4, 1));
        assert_ne!(base, synthetic_gradient::<f64>(&two_segment(8), 3, 1));
    }

    #[test]
    fn laplace_mean_magnitude_matches_scale() {
        // E|X| = b for Laplace(0, b); Var|X| = b², so the standard error of
        // the sample mean over m draws is b/sqrt(m).
        let b = 2.5;
        let m = 100_000;
        let spec = StreamSpec::laplace(vec![Segment { len: m, scale: b }], 11);
        let g: Vec<f64> = synthetic_gradient(&spec, 0, 0);
        let mean = g.iter().map(|v| v.abs()).sum::<f64>() / m as f64;
        let se = b / (m as f64).sqrt();
        assert!((mean - b).abs() < 3.0 * se, "mean |g| = {mean}, expected {b} ± {}", 3.0 * se);
        let positive = g.iter().filter(|v| **v > 0.0).count() as f64 / m as f64;
        assert!((positive - 0.5).abs() < 0.01);
    }

    #[test]
    fn lognormal_mean_magnitude_matches_scale() {
        let spec = StreamSpec {
            distribution: Distribution::LogNormal { sigma: 0.5 },
            ..StreamSpec::laplace(vec![Segment { len: 100_000, scale: 3.0 }], 5)
        };
        let g: Vec<f64> = synthetic_gradient(&spec, 0, 0);
        let mean = g.iter().map(|v| v.abs()).sum::<f64>() / g.len() as f64;
        assert!((mean - 3.0).abs() < 0.03);
    }

    #[test]
    fn decay_and_step_scale_the_stream() {
        let spec = StreamSpec {
            decay: 0.5,
            decay_step: Some(DecayStep { at: 2, factor: 0.1 }),
            ..two_segment(1)
        };
        assert_eq!(spec.scale_factor(0), 1.0);
        assert_eq!(spec.scale_factor(1), 0.5);
        assert!((spec.scale_factor(2) - 0.025).abs() < 1e-15);
        let flat = StreamSpec { decay: 1.0, decay_step: None, ..spec.clone() };
        let a: Vec<f64> = synthetic_gradient(&flat, 1, 0);
        let b: Vec<f64> = synthetic_gradient(&spec, 1, 0);
        assert!(a.iter().zip(&b).all(|(x, y)| (x * 0.5 - y).abs() < 1e-12));
    }

    #[test]
    fn segment_scales_are_visible() {
        let spec = two_segment(2);
        let g: Vec<f64> = synthetic_gradient(&spec, 0, 0);
        let m1 = g[..500].iter().map(|v| v.abs()).sum::<f64>() / 500.0;
        let m2 = g[500..].iter().map(|v| v.abs()).sum::<f64>() / 300.0;
        assert!(m2 > 2.5 * m1);
    }

    #[test]
    fn stream_validation() {
        assert!(two_segment(0).validate().is_ok());
        let mut s = two_segment(0);
        s.segments[1].scale = 0.0;
        assert!(matches!(s.validate(), Err(WorkloadError::BadScale { index: 1, .. })));
        let s = StreamSpec { decay: 1.5, ..two_segment(0) };
        assert!(matches!(s.validate(), Err(WorkloadError::BadDecay(_))));
        let s = StreamSpec::laplace(vec![], 0);
        assert_eq!(s.validate(), Err(WorkloadError::NoSegments));
    }

    #[test]
    fn equal_segments_cover_length() {
        let segs = StreamSpec::equal_segments(10, &[1.0, 2.0, 3.0]);
        assert_eq!(segs.iter().map(|s| s.len).collect::<Vec<_>>(), vec![3, 3, 4]);
    }

    fn quadratic(dim: usize) -> Task {
        TaskSpec { kind: TaskKind::Quadratic { condition: 1.0, noise: 0.0 }, dimension: dim, seed: 3 }
            .build()
            .unwrap()
    }

    #[test]
    fn quadratic_gradient_is_displacement() {
        let task = quadratic(16);
        let x: Vec<f64> = (0..16).map(|j| j as f64 * 0.1).collect();
        let mut g = vec![0.0; 16];
        task.task_gradient(&x, 0, 0, &mut g);
        let opt = task.optimum().unwrap();
        for j in 0..16 {
            assert_eq!(g[j], x[j] - opt[j]);
        }
        task.task_gradient(opt, 5, 2, &mut g);
        assert!(g.iter().all(|&v| v == 0.0));
        assert_eq!(task.full_loss(opt), 0.0);
    }

    fn logistic() -> Task {
        TaskSpec {
            kind: TaskKind::Logistic {
                samples: 400,
                nnz: 12,
                batch: 16,
                skew: 2.0,
                l2: 1e-3,
                label_noise: 0.05,
            },
            dimension: 200,
            seed: 9,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let task = logistic();
        let dim = 200;
        let h = 1e-5;
        for point in 0..5 {
            let mut rng = stream_rng(99, 1, point, 0, 0);
            let x: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let batch = task.minibatch(point, 1);
            let mut g = vec![0.0; dim];
            task.batch_gradient(&x, &batch, &mut g);
            let mut max_rel: f64 = 0.0;
            for j in 0..dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (task.batch_loss(&xp, &batch) - task.batch_loss(&xm, &batch)) / (2.0 * h);
                let rel = (fd - g[j]).abs() / g[j].abs().max(1e-3);
                max_rel = max_rel.max(rel);
            }
            assert!(max_rel < 1e-5, "point {point}: max relative error {max_rel}");
        }
    }

    #[test]
    fn minibatches_are_keyed() {
        let task = logistic();
        assert_eq!(task.minibatch(4, 1), task.minibatch(4, 1));
        assert_ne!(task.minibatch(4, 1), task.minibatch(4, 2));
        assert_eq!(task.minibatch(0, 0).len(), 16);
    }

    #[test]
    fn task_validation() {
        let bad = TaskSpec { kind: TaskKind::Quadratic { condition: 0.5, noise: 0.0 }, dimension: 4, seed: 0 };
        assert!(bad.build().is_err());
        let bad = TaskSpec { kind: TaskKind::Quadratic { condition: 1.0, noise: 0.0 }, dimension: 0, seed: 0 };
        assert_eq!(bad.validate(), Err(WorkloadError::NoDimension));
    }
}
