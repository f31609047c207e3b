//! The jump process of the free operator `L = L_{0,0}` and its path
//! functionals.
//!
//! From state `y` the process waits an `Exp(deg_m(y))` holding time, drawn as
//! `ξ / deg_m(y)` with `ξ = −ln u`, `u ∈ (0, 1)`, then jumps to a neighbor `z`
//! with probability `b(y, z) / deg_1(y)` (inverse-CDF scan over the sorted
//! neighbor list). Each step consumes one uniform for the holding time and one
//! for the target, in that order.
//!
//! Sample `i` under seed `s` draws from ChaCha8 stream `i` keyed by `s`, so a
//! trajectory depends only on `(graph, start, horizon, seed, i, max_jumps)`.

use std::ops::ControlFlow;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, MagneticPotential, Neighbor, Potential, VertexId, VertexSet, WeightedGraph};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("horizon {0} must be finite and nonnegative")]
    NonPositiveHorizon(f64),
    #[error("max_jumps must be at least 1")]
    ZeroMaxJumps,
    #[error("trajectory is censored")]
    CensoredTrajectory,
    #[error("trajectory was censored before leaving the set")]
    CensoredBeforeExit,
    #[error("time {time} lies beyond the trajectory horizon {horizon}")]
    HorizonExceeded { time: f64, horizon: f64 },
}

pub type Result<T> = std::result::Result<T, ProcessError>;

/// Base seed of a family of independent per-sample streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Generator for sample `sample_index`.
    pub fn stream(self, sample_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(sample_index);
        rng
    }

    /// A child seed, e.g. one per start vertex (splitmix64 finalizer).
    pub fn derive(self, key: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(key.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        RngSeed(z ^ (z >> 31))
    }
}

/// One sampled path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: VertexId,
    /// `Y_0, ..., Y_N`.
    pub states: Vec<usize>,
    /// Absolute jump times `τ_1 < ... < τ_N`, all `≤ horizon`.
    pub jump_times: Vec<f64>,
    pub horizon: f64,
    /// `max_jumps` was hit while a further jump inside the horizon was pending.
    pub censored: bool,
}

impl Trajectory {
    pub fn num_jumps(&self) -> usize {
        self.jump_times.len()
    }

    pub fn final_state(&self) -> usize {
        *self.states.last().expect("trajectory has a start state")
    }

    /// `N(t)`: number of recorded jumps `≤ t`.
    pub fn jumps_until(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&tau| tau <= t)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if self.censored {
            return Err(ProcessError::CensoredTrajectory);
        }
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(ProcessError::HorizonExceeded {
                time: t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// `X_t` for `t` in `[0, horizon]`.
    pub fn state_at(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        Ok(self.states[self.jumps_until(t)])
    }
}

/// A jump as reported to a walk visitor.
pub(crate) struct Jump<'a> {
    pub from: usize,
    pub edge: &'a Neighbor,
    pub time: f64,
}

pub(crate) struct WalkEnd {
    pub state: usize,
    pub jumps: usize,
    /// Time of the last recorded jump (0 if none).
    pub last_time: f64,
    pub censored: bool,
    /// The visitor stopped the walk.
    pub stopped: bool,
}

pub(crate) fn validate(g: &WeightedGraph, x: VertexId, t: f64, max_jumps: usize) -> Result<()> {
    g.check_vertex(x)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(ProcessError::NonPositiveHorizon(t));
    }
    if max_jumps == 0 {
        return Err(ProcessError::ZeroMaxJumps);
    }
    Ok(())
}

/// Runs the jump chain from `x` up to time `t`, calling `on_jump` for every
/// jump at or before `t`.
pub(crate) fn walk<R: Rng>(
    g: &WeightedGraph,
    x: usize,
    t: f64,
    rng: &mut R,
    max_jumps: usize,
    mut on_jump: impl FnMut(Jump<'_>) -> ControlFlow<()>,
) -> WalkEnd {
    let mut state = x;
    let mut time = 0.0;
    let mut jumps = 0;
    loop {
        let rate = g.deg_m(state);
        if rate == 0.0 {
            // absorbing: Exp(0) never rings
            break;
        }
        let xi: f64 = rng.sample::<f64, _>(Open01);
        let next_time = time + (-xi.ln()) / rate;
        if next_time > t {
            break;
        }
        if jumps == max_jumps {
            return WalkEnd {
                state,
                jumps,
                last_time: time,
                censored: true,
                stopped: false,
            };
        }
        let neighbors = g.neighbors(state);
        let target = rng.random::<f64>() * g.deg_1(state);
        let mut acc = 0.0;
        let mut chosen = &neighbors[neighbors.len() - 1];
        for nb in neighbors {
            acc += nb.weight;
            if target < acc {
                chosen = nb;
                break;
            }
        }
        jumps += 1;
        time = next_time;
        let from = state;
        state = chosen.vertex;
        if on_jump(Jump {
            from,
            edge: chosen,
            time,
        })
        .is_break()
        {
            return WalkEnd {
                state,
                jumps,
                last_time: time,
                censored: false,
                stopped: true,
            };
        }
    }
    WalkEnd {
        state,
        jumps,
        last_time: time,
        censored: false,
        stopped: false,
    }
}

/// Samples one trajectory of the process started at `x` on `[0, t]`.
pub fn sample_trajectory(
    g: &WeightedGraph,
    x: VertexId,
    t: f64,
    seed: RngSeed,
    sample_index: u64,
    max_jumps: usize,
) -> Result<Trajectory> {
    validate(g, x, t, max_jumps)?;
    let mut rng = seed.stream(sample_index);
    let mut states = vec![x.0];
    let mut jump_times = Vec::new();
    let end = walk(g, x.0, t, &mut rng, max_jumps, |jump| {
        states.push(jump.edge.vertex);
        jump_times.push(jump.time);
        ControlFlow::Continue(())
    });
    Ok(Trajectory {
        start: x,
        states,
        jump_times,
        horizon: t,
        censored: end.censored,
    })
}

/// Exit time from a vertex set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExitTime {
    At(f64),
    /// The path stays in the set on `[0, horizon]`, i.e. the event `{t < τ_U}`.
    BeyondHorizon,
}

/// `τ_U = inf{s ≥ 0 : X_s ∉ U}`.
pub fn first_exit(traj: &Trajectory, subset: &VertexSet) -> Result<ExitTime> {
    if !subset.contains(traj.states[0]) {
        return Ok(ExitTime::At(0.0));
    }
    if let Some(n) = traj.states.iter().position(|&s| !subset.contains(s)) {
        return Ok(ExitTime::At(traj.jump_times[n - 1]));
    }
    if traj.censored {
        Err(ProcessError::CensoredBeforeExit)
    } else {
        Ok(ExitTime::BeyondHorizon)
    }
}

/// `∫_0^t θ(dX_s) = Σ_{n ≤ N(t)} θ(Y_{n−1}, Y_n)`.
pub fn line_integral(
    g: &WeightedGraph,
    traj: &Trajectory,
    theta: &MagneticPotential,
    t: f64,
) -> Result<f64> {
    traj.check_time(t)?;
    let n = traj.jumps_until(t);
    let mut sum = 0.0;
    for w in traj.states[..=n].windows(2) {
        sum += theta.get(g, w[0], w[1]);
    }
    Ok(sum)
}

/// `∫_0^t v(X_s) ds` as a sum over dwell segments.
pub fn potential_integral(traj: &Trajectory, v: &Potential, t: f64) -> Result<f64> {
    traj.check_time(t)?;
    let n = traj.jumps_until(t);
    let mut sum = 0.0;
    let mut prev = 0.0;
    for k in 0..n {
        sum += v.at(traj.states[k]) * (traj.jump_times[k] - prev);
        prev = traj.jump_times[k];
    }
    sum += v.at(traj.states[n]) * (t - prev);
    Ok(sum)
}

/// Euclidean action `S_t = i ∫θ(dX) − ∫v(X_s) ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionValue {
    pub line_integral: f64,
    pub potential_integral: f64,
}

impl ActionValue {
    pub fn exponent(&self) -> C64 {
        C64::new(-self.potential_integral, self.line_integral)
    }

    /// `e^{S_t}`.
    pub fn weight(&self) -> C64 {
        C64::from_polar((-self.potential_integral).exp(), self.line_integral)
    }

    /// `|e^{S_t}| = e^{−∫v}`, evaluated without going through the complex exponential.
    pub fn modulus(&self) -> f64 {
        (-self.potential_integral).exp()
    }
}

pub fn action(
    g: &WeightedGraph,
    traj: &Trajectory,
    v: &Potential,
    theta: &MagneticPotential,
    t: f64,
) -> Result<ActionValue> {
    Ok(ActionValue {
        line_integral: line_integral(g, traj, theta, t)?,
        potential_integral: potential_integral(traj, v, t)?,
    })
}
