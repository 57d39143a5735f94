//! Two-state ON/OFF activity model of a node.
//!
//! The node alternates between an active state (ON, drawing battery current)
//! and an idle state (OFF). Sojourns are exponential: an ON period ends at
//! rate `lambda`, an OFF period ends at rate `mu`. The rate matrix therefore
//! has diagonal `a_on = -lambda`, `a_off = -mu`, and the probability of still
//! being in state `i` after `d` time units is `exp(d * a_ii)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::rng_from_seed;

/// Activity state of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeState {
    #[serde(rename = "ON", alias = "on")]
    On,
    #[serde(rename = "OFF", alias = "off")]
    Off,
}

impl NodeState {
    pub fn toggled(self) -> Self {
        match self {
            NodeState::On => NodeState::Off,
            NodeState::Off => NodeState::On,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeState::On => "ON",
            NodeState::Off => "OFF",
        }
    }
}

impl fmt::Display for NodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ON" => Ok(NodeState::On),
            "OFF" => Ok(NodeState::Off),
            other => Err(invalid("state", format!("expected ON or OFF, got `{other}`"))),
        }
    }
}

/// Leaving rates of the ON/OFF chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct OnOffParams {
    lambda: f64,
    mu: f64,
}

#[derive(Deserialize)]
struct RawParams {
    lambda: f64,
    mu: f64,
}

impl TryFrom<RawParams> for OnOffParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        OnOffParams::new(raw.lambda, raw.mu)
    }
}

impl OnOffParams {
    /// `lambda` is the rate of leaving ON, `mu` the rate of leaving OFF.
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda", format!("must be finite and >= 0, got {lambda}")));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(invalid("mu", format!("must be finite and >= 0, got {mu}")));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Per-step probability of staying ON, `1 - lambda`. Only a probability
    /// when `lambda <= 1`.
    pub fn lambda_on(&self) -> f64 {
        1.0 - self.lambda
    }

    /// Per-step probability of staying OFF, `1 - mu`.
    pub fn lambda_off(&self) -> f64 {
        1.0 - self.mu
    }

    /// Rate at which `state` is left.
    pub fn leaving_rate(&self, state: NodeState) -> f64 {
        match state {
            NodeState::On => self.lambda,
            NodeState::Off => self.mu,
        }
    }

    /// Diagonal entry `a_ii` of the generator for `state`.
    pub fn rate_diagonal(&self, state: NodeState) -> f64 {
        -self.leaving_rate(state)
    }

    /// Net rate `mu - lambda` that shapes the on-time density.
    pub fn net_rate(&self) -> f64 {
        self.mu - self.lambda
    }

    /// Long-run fraction of time spent ON. `None` when both rates are zero.
    pub fn stationary_on_fraction(&self) -> Option<f64> {
        let total = self.lambda + self.mu;
        (total > 0.0).then(|| self.mu / total)
    }
}

/// Probability that a sojourn in `state` lasts longer than `duration`.
pub fn sojourn_survival(params: &OnOffParams, state: NodeState, duration: f64) -> Result<f64> {
    if duration.is_nan() || duration < 0.0 {
        return Err(invalid("duration", format!("must be >= 0, got {duration}")));
    }
    let exponent = duration * params.rate_diagonal(state);
    // 0 * inf would give NaN for an infinite duration with zero rate.
    if exponent.is_nan() {
        return Ok(1.0);
    }
    Ok(exponent.exp())
}

/// One timed piece of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub state: NodeState,
    pub start: f64,
    pub duration: f64,
}

impl Segment {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

/// Alternating ON/OFF segments tiling `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    horizon: f64,
    segments: Vec<Segment>,
}

const TILING_REL_TOL: f64 = 1e-12;

impl Trajectory {
    /// Builds a trajectory from explicit segments, checking tiling,
    /// alternation, and positivity.
    pub fn new(horizon: f64, segments: Vec<Segment>) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidTrajectory(format!("horizon must be > 0, got {horizon}")));
        }
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidTrajectory("no segments".into()))?;
        if first.start != 0.0 {
            return Err(Error::InvalidTrajectory(format!(
                "first segment starts at {}, expected 0",
                first.start
            )));
        }
        let tol = TILING_REL_TOL * horizon;
        let mut total = 0.0;
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.duration.is_finite() && seg.duration > 0.0) {
                return Err(Error::InvalidTrajectory(format!(
                    "segment {i} has non-positive duration {}",
                    seg.duration
                )));
            }
            if i > 0 {
                let prev = &segments[i - 1];
                if prev.state == seg.state {
                    return Err(Error::InvalidTrajectory(format!(
                        "segments {} and {i} are both {}",
                        i - 1,
                        seg.state
                    )));
                }
                if (prev.end() - seg.start).abs() > tol {
                    return Err(Error::InvalidTrajectory(format!(
                        "segment {i} starts at {} but previous ends at {}",
                        seg.start,
                        prev.end()
                    )));
                }
            }
            total += seg.duration;
        }
        if (total - horizon).abs() > tol {
            return Err(Error::InvalidTrajectory(format!(
                "durations sum to {total}, horizon is {horizon}"
            )));
        }
        Ok(Self { horizon, segments })
    }

    /// Builds a trajectory from alternating durations starting in `initial`.
    /// The horizon is the sum of the durations.
    pub fn from_durations(initial: NodeState, durations: &[f64]) -> Result<Self> {
        let mut segments = Vec::with_capacity(durations.len());
        let mut start = 0.0;
        let mut state = initial;
        for &duration in durations {
            segments.push(Segment {
                state,
                start,
                duration,
            });
            start += duration;
            state = state.toggled();
        }
        Self::new(start, segments)
    }

    /// A single segment in `state` covering the whole horizon.
    pub fn constant(state: NodeState, horizon: f64) -> Result<Self> {
        Self::new(
            horizon,
            vec![Segment {
                state,
                start: 0.0,
                duration: horizon,
            }],
        )
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn initial_state(&self) -> NodeState {
        self.segments[0].state
    }

    pub fn final_state(&self) -> NodeState {
        self.segments[self.segments.len() - 1].state
    }

    pub fn total_off_time(&self) -> f64 {
        self.time_in(NodeState::Off)
    }

    fn time_in(&self, state: NodeState) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.state == state)
            .map(|s| s.duration)
            .sum()
    }

    /// CSV rows `segment_index,state,start,duration`, header included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("segment_index,state,start,duration\n");
        for (i, seg) in self.segments.iter().enumerate() {
            out.push_str(&format!("{i},{},{},{}\n", seg.state, seg.start, seg.duration));
        }
        out
    }
}

/// Sum of the ON-segment durations.
pub fn total_on_time(traj: &Trajectory) -> f64 {
    traj.time_in(NodeState::On)
}

/// Samples a trajectory on `[0, horizon]` with the generator seeded by `seed`.
pub fn sample_trajectory(
    params: &OnOffParams,
    initial: NodeState,
    horizon: f64,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = rng_from_seed(seed);
    sample_trajectory_with(params, initial, horizon, &mut rng)
}

/// Samples a trajectory drawing from a caller-owned generator. The last
/// sojourn is clipped at the horizon.
pub fn sample_trajectory_with<R: Rng + ?Sized>(
    params: &OnOffParams,
    initial: NodeState,
    horizon: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("must be finite and > 0, got {horizon}")));
    }
    let mut segments = Vec::new();
    let mut now = 0.0;
    let mut state = initial;
    loop {
        let sojourn = draw_sojourn(params, state, rng);
        if now + sojourn >= horizon {
            segments.push(Segment {
                state,
                start: now,
                duration: horizon - now,
            });
            break;
        }
        segments.push(Segment {
            state,
            start: now,
            duration: sojourn,
        });
        now += sojourn;
        state = state.toggled();
    }
    Ok(Trajectory { horizon, segments })
}

/// Total ON time of a sampled path without materializing its segments.
pub fn sample_on_time_with<R: Rng + ?Sized>(
    params: &OnOffParams,
    initial: NodeState,
    horizon: f64,
    rng: &mut R,
) -> f64 {
    let mut now = 0.0;
    let mut on = 0.0;
    let mut state = initial;
    while now < horizon {
        let sojourn = draw_sojourn(params, state, rng).min(horizon - now);
        if state == NodeState::On {
            on += sojourn;
        }
        now += sojourn;
        state = state.toggled();
    }
    on
}

fn draw_sojourn<R: Rng + ?Sized>(params: &OnOffParams, state: NodeState, rng: &mut R) -> f64 {
    let rate = params.leaving_rate(state);
    if rate == 0.0 {
        return f64::INFINITY;
    }
    let unit: f64 = rng.sample(Exp1);
    unit / rate
}
