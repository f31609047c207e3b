//! Monte Carlo estimators built on the Feynman-Kac-Itô formula.
//!
//! Samples are processed in fixed-size chunks of consecutive indices. Chunks
//! may run on any number of workers, but their partial sums are always
//! combined in chunk order, so an estimate is a pure function of
//! `(inputs, seed, n_samples, max_jumps)`.
//!
//! Censored paths (more than `max_jumps` jumps before `t`) contribute zero.
//! Since `|e^{S_t}| ≤ e^{t max v₋}`, the omitted mass is at most
//! `censored_fraction · e^{t max v₋} · sup|f|`, reported as `bias_bound`.

use std::ops::{ControlFlow, Range};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, MagneticPotential, Potential, VertexId, VertexSet, WeightedGraph};
use crate::process::{self, walk, ProcessError, RngSeed};
use crate::C64;

const CHUNK: u64 = 1024;

/// Below this many terminal hits a kernel estimate is flagged as high-variance.
pub const LOW_HIT_THRESHOLD: u64 = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("start vertex {0} is not in the subset")]
    StartOutsideSubset(usize),
    #[error("f is nonzero at vertex {0}, outside the subset")]
    FunctionOutsideSubset(usize),
    #[error("f has a non-finite value at vertex {0}")]
    UnboundedFunction(usize),
    #[error("time {0} must be positive")]
    NonPositiveTime(f64),
    #[error("n_samples must be at least 1")]
    NoSamples,
    #[error("could not build worker pool: {0}")]
    WorkerPool(String),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

/// Sampling parameters shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: u64,
    pub seed: RngSeed,
    pub max_jumps: usize,
    /// Worker threads; `None` uses the global pool. Never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl McConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        McConfig {
            n_samples,
            seed: RngSeed(seed),
            max_jumps: 10_000,
            workers: None,
        }
    }

    pub fn with_max_jumps(mut self, max_jumps: usize) -> Self {
        self.max_jumps = max_jumps;
        self
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(EstimatorError::NoSamples);
        }
        if self.max_jumps == 0 {
            return Err(ProcessError::ZeroMaxJumps.into());
        }
        Ok(())
    }
}

/// A Monte Carlo estimate with its statistical report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: C64,
    /// Max of the real- and imaginary-part standard errors.
    pub stderr: f64,
    pub n_samples: u64,
    pub censored_fraction: f64,
    pub bias_bound: f64,
    /// Terminal-state hits for kernel and trace estimates (minimum over
    /// start vertices for traces).
    pub hits: Option<u64>,
}

impl McEstimate {
    pub fn low_hit_count(&self) -> bool {
        self.hits.is_some_and(|h| h < LOW_HIT_THRESHOLD)
    }

    /// `|mean − reference| ≤ k·stderr + bias_bound`.
    pub fn agrees_with(&self, reference: C64, k: f64) -> bool {
        (self.mean - reference).norm() <= k * self.stderr + self.bias_bound
    }

    /// Per-component variant of [`agrees_with`](Self::agrees_with).
    pub fn agrees_componentwise(&self, reference: C64, k: f64) -> bool {
        let tol = k * self.stderr + self.bias_bound;
        (self.mean.re - reference.re).abs() <= tol && (self.mean.im - reference.im).abs() <= tol
    }
}

/// Compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Outcome of one sample.
#[derive(Debug, Clone, Copy)]
struct Sample {
    value: C64,
    censored: bool,
    hit: bool,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    re: KahanSum,
    im: KahanSum,
    re2: KahanSum,
    im2: KahanSum,
    censored: u64,
    hits: u64,
}

impl Moments {
    fn push(&mut self, s: &Sample, shift: C64) {
        let d = s.value - shift;
        self.re.add(d.re);
        self.im.add(d.im);
        self.re2.add(d.re * d.re);
        self.im2.add(d.im * d.im);
        self.censored += u64::from(s.censored);
        self.hits += u64::from(s.hit);
    }

    fn merge(&mut self, other: &Moments) {
        self.re.add(other.re.value());
        self.im.add(other.im.value());
        self.re2.add(other.re2.value());
        self.im2.add(other.im2.value());
        self.censored += other.censored;
        self.hits += other.hits;
    }
}

/// Runs `per_chunk` over consecutive index chunks and returns the results in
/// chunk order.
fn map_chunks<T, F>(cfg: &McConfig, per_chunk: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let n = cfg.n_samples;
    let n_chunks = n.div_ceil(CHUNK);
    let run = || {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| per_chunk(c * CHUNK..((c + 1) * CHUNK).min(n)))
            .collect::<Vec<T>>()
    };
    match cfg.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| EstimatorError::WorkerPool(e.to_string()))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

fn estimate_with<F>(cfg: &McConfig, sup_weight: f64, sample: F) -> Result<McEstimate>
where
    F: Fn(u64) -> Sample + Sync,
{
    cfg.validate()?;
    // shifting by the first sample keeps constant estimators at exactly zero variance
    let shift = sample(0).value;
    let chunks = map_chunks(cfg, |range| {
        let mut m = Moments::default();
        for i in range {
            m.push(&sample(i), shift);
        }
        m
    })?;
    let mut total = Moments::default();
    for c in &chunks {
        total.merge(c);
    }
    let n = cfg.n_samples as f64;
    let mean_shifted = C64::new(total.re.value() / n, total.im.value() / n);
    let stderr = if cfg.n_samples > 1 {
        let var = |s2: f64, s: f64| ((s2 - s * s / n) / (n - 1.0)).max(0.0);
        let vr = var(total.re2.value(), total.re.value());
        let vi = var(total.im2.value(), total.im.value());
        (vr.max(vi) / n).sqrt()
    } else {
        0.0
    };
    let censored_fraction = total.censored as f64 / n;
    Ok(McEstimate {
        mean: mean_shifted + shift,
        stderr,
        n_samples: cfg.n_samples,
        censored_fraction,
        bias_bound: censored_fraction * sup_weight,
        hits: Some(total.hits),
    })
}

fn check_function(g: &WeightedGraph, f: &[C64]) -> Result<f64> {
    if f.len() != g.num_vertices() {
        return Err(GraphError::LengthMismatch {
            expected: g.num_vertices(),
            got: f.len(),
        }
        .into());
    }
    let mut sup: f64 = 0.0;
    for (x, z) in f.iter().enumerate() {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(EstimatorError::UnboundedFunction(x));
        }
        sup = sup.max(z.norm());
    }
    Ok(sup)
}

fn check_potential(g: &WeightedGraph, v: &Potential) -> Result<()> {
    if v.len() != g.num_vertices() {
        return Err(GraphError::LengthMismatch {
            expected: g.num_vertices(),
            got: v.len(),
        }
        .into());
    }
    Ok(())
}

/// `e^{t · max(0, −min v)}`, the largest possible `|e^{S_t}|`.
pub fn sup_path_weight(v: &Potential, t: f64) -> f64 {
    (t * (-v.min()).max(0.0)).exp()
}

/// Action and terminal state of one walk, optionally killed on leaving `subset`.
struct PathOutcome {
    state: usize,
    line: f64,
    potential: f64,
    censored: bool,
    killed: bool,
}

#[allow(clippy::too_many_arguments)]
fn run_path(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    x: usize,
    t: f64,
    seed: RngSeed,
    index: u64,
    max_jumps: usize,
    subset: Option<&VertexSet>,
) -> PathOutcome {
    let mut rng = seed.stream(index);
    let mut line = 0.0;
    let mut potential = 0.0;
    let mut prev = 0.0;
    let end = walk(g, x, t, &mut rng, max_jumps, |jump| {
        line += theta.along(jump.from, jump.edge);
        potential += v.at(jump.from) * (jump.time - prev);
        prev = jump.time;
        match subset {
            Some(u) if !u.contains(jump.edge.vertex) => ControlFlow::Break(()),
            _ => ControlFlow::Continue(()),
        }
    });
    if !end.censored && !end.stopped {
        potential += v.at(end.state) * (t - end.last_time);
    }
    PathOutcome {
        state: end.state,
        line,
        potential,
        censored: end.censored,
        killed: end.stopped,
    }
}

impl PathOutcome {
    fn weight(&self) -> C64 {
        C64::from_polar((-self.potential).exp(), self.line)
    }
}

/// Estimates `e^{-tL_{v,θ}} f(x) = E_x[1_{t<τ} e^{S_t} f(X_t)]`.
pub fn fki_semigroup(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
    x: VertexId,
    t: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    process::validate(g, x, t, cfg.max_jumps)?;
    check_potential(g, v)?;
    let sup_f = check_function(g, f)?;
    estimate_with(cfg, sup_path_weight(v, t) * sup_f, |i| {
        let p = run_path(g, v, theta, x.0, t, cfg.seed, i, cfg.max_jumps, None);
        if p.censored {
            Sample {
                value: C64::new(0.0, 0.0),
                censored: true,
                hit: false,
            }
        } else {
            Sample {
                value: p.weight() * f[p.state],
                censored: false,
                hit: false,
            }
        }
    })
    .map(|e| McEstimate { hits: None, ..e })
}

/// Estimates the Dirichlet semigroup `e^{-tL^(U)_{v,θ}} f(x) = E_x[1_{t<τ_U} e^{S_t} f(X_t)]`.
///
/// A path that leaves `U` before being censored is determined (it contributes
/// zero) and does not count as censored.
#[allow(clippy::too_many_arguments)]
pub fn fki_dirichlet(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    f: &[C64],
    x: VertexId,
    t: f64,
    subset: &VertexSet,
    cfg: &McConfig,
) -> Result<McEstimate> {
    process::validate(g, x, t, cfg.max_jumps)?;
    check_potential(g, v)?;
    let sup_f = check_function(g, f)?;
    if !subset.contains(x.0) {
        return Err(EstimatorError::StartOutsideSubset(x.0));
    }
    if let Some(y) = (0..g.num_vertices()).find(|&y| !subset.contains(y) && f[y] != C64::new(0.0, 0.0)) {
        return Err(EstimatorError::FunctionOutsideSubset(y));
    }
    estimate_with(cfg, sup_path_weight(v, t) * sup_f, |i| {
        let p = run_path(g, v, theta, x.0, t, cfg.seed, i, cfg.max_jumps, Some(subset));
        let value = if p.censored || p.killed {
            C64::new(0.0, 0.0)
        } else {
            p.weight() * f[p.state]
        };
        Sample {
            value,
            censored: p.censored,
            hit: false,
        }
    })
    .map(|e| McEstimate { hits: None, ..e })
}

/// Estimates the kernel `e^{-tL_{v,θ}}(x, y) = E_x[1_{t<τ} 1_{X_t=y} e^{S_t}] / m(y)`
/// by terminal-state filtering.
#[allow(clippy::too_many_arguments)]
pub fn fki_kernel(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    x: VertexId,
    y: VertexId,
    t: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    if !(t > 0.0) {
        return Err(EstimatorError::NonPositiveTime(t));
    }
    process::validate(g, x, t, cfg.max_jumps)?;
    g.check_vertex(y)?;
    check_potential(g, v)?;
    let inv_my = 1.0 / g.m(y.0);
    estimate_with(cfg, sup_path_weight(v, t) * inv_my, |i| {
        let p = run_path(g, v, theta, x.0, t, cfg.seed, i, cfg.max_jumps, None);
        let hit = !p.censored && p.state == y.0;
        Sample {
            value: if hit {
                p.weight() * inv_my
            } else {
                C64::new(0.0, 0.0)
            },
            censored: p.censored,
            hit,
        }
    })
}

/// Estimates `Σ_{x∈U} e^{-tL_{v,θ}}(x, x) m(x)`. Each start vertex uses the
/// child seed `seed.derive(x)`; standard errors add in quadrature.
pub fn fki_trace(
    g: &WeightedGraph,
    v: &Potential,
    theta: &MagneticPotential,
    subset: &VertexSet,
    t: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    if subset.is_empty() {
        return Err(EstimatorError::Graph(GraphError::Empty));
    }
    let mut mean = C64::new(0.0, 0.0);
    let mut var = 0.0;
    let mut censored = 0.0;
    let mut bias = 0.0;
    let mut min_hits = u64::MAX;
    for &x in subset.members() {
        let local = McConfig {
            seed: cfg.seed.derive(x as u64),
            ..*cfg
        };
        let e = fki_kernel(g, v, theta, VertexId(x), VertexId(x), t, &local)?;
        let m = g.m(x);
        mean += e.mean * m;
        var += (m * e.stderr).powi(2);
        censored += e.censored_fraction * cfg.n_samples as f64;
        bias += m * e.bias_bound;
        min_hits = min_hits.min(e.hits.unwrap_or(0));
    }
    let total = cfg.n_samples * subset.len() as u64;
    Ok(McEstimate {
        mean,
        stderr: var.sqrt(),
        n_samples: total,
        censored_fraction: censored / total as f64,
        bias_bound: bias,
        hits: Some(min_hits),
    })
}

/// Empirical `P_x(X_t = y)` for every `y` in the host.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalDistribution {
    pub probabilities: Vec<f64>,
    /// Binomial standard errors `sqrt(p(1−p)/n)`.
    pub stderr: Vec<f64>,
    pub n_samples: u64,
    pub censored_fraction: f64,
}

pub fn terminal_distribution(
    g: &WeightedGraph,
    x: VertexId,
    t: f64,
    cfg: &McConfig,
) -> Result<TerminalDistribution> {
    process::validate(g, x, t, cfg.max_jumps)?;
    cfg.validate()?;
    let zero_v = Potential::zero(g);
    let zero_theta = MagneticPotential::zero(g);
    let n_vertices = g.num_vertices();
    let chunks = map_chunks(cfg, |range| {
        let mut counts = vec![0u64; n_vertices + 1];
        for i in range {
            let p = run_path(g, &zero_v, &zero_theta, x.0, t, cfg.seed, i, cfg.max_jumps, None);
            if p.censored {
                counts[n_vertices] += 1;
            } else {
                counts[p.state] += 1;
            }
        }
        counts
    })?;
    let mut counts = vec![0u64; n_vertices + 1];
    for c in &chunks {
        for (acc, k) in counts.iter_mut().zip(c) {
            *acc += k;
        }
    }
    let n = cfg.n_samples as f64;
    let probabilities: Vec<f64> = counts[..n_vertices].iter().map(|&k| k as f64 / n).collect();
    let stderr = probabilities
        .iter()
        .map(|p| (p * (1.0 - p) / n).sqrt())
        .collect();
    Ok(TerminalDistribution {
        probabilities,
        stderr,
        n_samples: cfg.n_samples,
        censored_fraction: counts[n_vertices] as f64 / n,
    })
}

/// Estimates `P_x(N(t) ≥ k)`. A censored path has more than `max_jumps`
/// jumps, so it counts as a hit whenever `max_jumps + 1 ≥ k`.
pub fn jump_count_tail(
    g: &WeightedGraph,
    x: VertexId,
    t: f64,
    k: usize,
    cfg: &McConfig,
) -> Result<McEstimate> {
    process::validate(g, x, t, cfg.max_jumps)?;
    let censored_decides = cfg.max_jumps + 1 >= k;
    estimate_with(cfg, 1.0, |i| {
        let mut rng = cfg.seed.stream(i);
        let end = walk(g, x.0, t, &mut rng, cfg.max_jumps, |_| ControlFlow::Continue(()));
        let hit = if end.censored {
            censored_decides
        } else {
            end.jumps >= k
        };
        Sample {
            value: C64::new(if hit { 1.0 } else { 0.0 }, 0.0),
            censored: end.censored && !censored_decides,
            hit,
        }
    })
}
