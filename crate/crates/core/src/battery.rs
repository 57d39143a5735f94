//! State-of-discharge (SOD) battery model.
//!
//! The SOD `F` is the consumed fraction of nominal capacity `C_N`:
//!
//! ```text
//! F(t) = F_init + (1/C_N) * integral_0^t I_sod(s) ds,    I_sod(s) = K exp(-s/tau)
//! ```
//!
//! so `F(t) = F_init + (K tau / C_N)(1 - exp(-t/tau))`, saturated at 1.
//! Under ON/OFF activity the decay clock `s` is the cumulative ON time: the
//! battery is untouched while the node is OFF, which yields flat plateaus
//! in the discharge curve. There is no recovery while OFF.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::occupancy::{mean_on_time, on_time_density, OccupancySpec};
use crate::onoff::{total_on_time, NodeState, Trajectory};
use crate::quadrature::integrate_smooth;

/// Nominal parameters of the gassing current
/// `I_gas = K_gas * exp(C_U * V_N + C_U * T_N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gassing {
    pub k_gas: f64,
    /// Voltage coefficient, applied to both the voltage and temperature term.
    pub c_u: f64,
    pub v_n: f64,
    pub t_n: f64,
}

impl Gassing {
    pub fn current(&self) -> f64 {
        self.k_gas * (self.c_u * self.v_n + self.c_u * self.t_n).exp()
    }
}

/// Immutable discharge parameters of one battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSodModel")]
pub struct SodModel {
    k: f64,
    tau: f64,
    capacity: f64,
    f_init: f64,
    gassing: Option<Gassing>,
}

#[derive(Deserialize)]
struct RawSodModel {
    k: f64,
    tau: f64,
    capacity: f64,
    #[serde(default)]
    f_init: f64,
    #[serde(default)]
    gassing: Option<Gassing>,
}

impl TryFrom<RawSodModel> for SodModel {
    type Error = Error;

    fn try_from(raw: RawSodModel) -> Result<Self> {
        let model = SodModel::new(raw.k, raw.tau, raw.capacity, raw.f_init)?;
        match raw.gassing {
            Some(g) => model.with_gassing(g),
            None => Ok(model),
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative_time(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be >= 0, got {v}")))
    }
}

impl SodModel {
    /// `k` is the initial discharge current, `tau` its decay constant,
    /// `capacity` the nominal capacity `C_N`, `f_init` the starting SOD.
    pub fn new(k: f64, tau: f64, capacity: f64, f_init: f64) -> Result<Self> {
        positive("k", k)?;
        positive("tau", tau)?;
        positive("capacity", capacity)?;
        if !(0.0..1.0).contains(&f_init) {
            return Err(invalid("f_init", format!("must lie in [0, 1), got {f_init}")));
        }
        Ok(Self {
            k,
            tau,
            capacity,
            f_init,
            gassing: None,
        })
    }

    pub fn with_gassing(mut self, gassing: Gassing) -> Result<Self> {
        let current = gassing.current();
        if !(current.is_finite() && current >= 0.0) {
            return Err(invalid(
                "gassing",
                format!("gassing current must be finite and >= 0, got {current}"),
            ));
        }
        self.gassing = Some(gassing);
        Ok(self)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn f_init(&self) -> f64 {
        self.f_init
    }

    pub fn gassing(&self) -> Option<&Gassing> {
        self.gassing.as_ref()
    }

    /// Constant gassing current, zero when no gassing record is set.
    pub fn gassing_current(&self) -> f64 {
        self.gassing.map_or(0.0, |g| g.current())
    }

    /// `I - I_gas` for a raw battery current `I`, floored at zero.
    pub fn effective_current(&self, raw_current: f64) -> f64 {
        (raw_current - self.gassing_current()).max(0.0)
    }

    /// SOD after `elapsed` active time under a constant raw current.
    pub fn sod_constant_current(&self, raw_current: f64, elapsed: f64) -> Result<f64> {
        non_negative_time("elapsed", elapsed)?;
        let f = self.f_init + self.effective_current(raw_current) * elapsed / self.capacity;
        Ok(f.min(1.0))
    }

    /// Limit of the SOD as active time grows, before saturation.
    pub fn asymptote(&self) -> f64 {
        self.f_init + self.k * self.tau / self.capacity
    }

    fn sod_at(&self, active_time: f64) -> f64 {
        let drawn = self.k * self.tau / self.capacity * -(-active_time / self.tau).exp_m1();
        (self.f_init + drawn).min(1.0)
    }
}

/// `I_sod = K exp(-t / tau)` after `active_time` of use.
pub fn discharge_current(model: &SodModel, active_time: f64) -> Result<f64> {
    non_negative_time("active_time", active_time)?;
    Ok(model.k * (-active_time / model.tau).exp())
}

/// SOD after `elapsed` units of uninterrupted activity.
pub fn sod_continuous(model: &SodModel, elapsed: f64) -> Result<f64> {
    non_negative_time("elapsed", elapsed)?;
    Ok(model.sod_at(elapsed))
}

/// Active time at which the SOD reaches `threshold`, or `None` if the
/// asymptote never strictly exceeds it.
pub fn predict_lifetime(model: &SodModel, threshold: f64) -> Result<Option<f64>> {
    if !(threshold > model.f_init && threshold <= 1.0) {
        return Err(invalid(
            "threshold",
            format!("must lie in ({}, 1], got {threshold}", model.f_init),
        ));
    }
    if model.asymptote() <= threshold {
        return Ok(None);
    }
    let fraction = (threshold - model.f_init) * model.capacity / (model.k * model.tau);
    Ok(Some(-model.tau * (-fraction).ln_1p()))
}

/// A battery evolving along a node's activity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    model: SodModel,
    sod: f64,
    active_time: f64,
}

impl BatteryState {
    pub fn new(model: SodModel) -> Self {
        Self {
            model,
            sod: model.f_init,
            active_time: 0.0,
        }
    }

    pub fn model(&self) -> &SodModel {
        &self.model
    }

    pub fn sod(&self) -> f64 {
        self.sod
    }

    pub fn active_time(&self) -> f64 {
        self.active_time
    }

    /// Residual energy fraction `1 - F`.
    pub fn residual(&self) -> f64 {
        1.0 - self.sod
    }

    /// State after spending `duration` in `state`. OFF time leaves the
    /// battery untouched.
    pub fn advanced(&self, state: NodeState, duration: f64) -> Self {
        match state {
            NodeState::Off => *self,
            NodeState::On => self.with_active_time(self.active_time + duration),
        }
    }

    fn with_active_time(&self, active_time: f64) -> Self {
        Self {
            model: self.model,
            sod: self.model.sod_at(active_time).max(self.sod),
            active_time,
        }
    }
}

/// Battery state after following `traj` from a fresh battery.
pub fn sod_modulated(model: &SodModel, traj: &Trajectory) -> BatteryState {
    // Same summation as total_on_time so equal ON totals give equal bits.
    BatteryState::new(*model).with_active_time(total_on_time(traj))
}

/// Expected SOD when the active time follows the closed-form on-time law,
/// with the plug-in value at the mean active time for comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsumptionEstimate {
    pub expected: f64,
    pub plug_in: f64,
}

pub fn expected_consumed_fraction(model: &SodModel, spec: &OccupancySpec) -> ConsumptionEstimate {
    let t = spec.horizon();
    let expected = integrate_smooth(
        |theta| {
            let theta = theta.clamp(0.0, t);
            model.sod_at(theta) * on_time_density(spec, theta).expect("theta clamped to [0, t]")
        },
        0.0,
        t,
    );
    ConsumptionEstimate {
        expected,
        plug_in: model.sod_at(mean_on_time(spec)),
    }
}

/// One row of a discharge trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub sod: f64,
    pub active_time: f64,
    pub current: f64,
}

/// Samples the discharge along `traj` on a uniform grid of `points` nodes,
/// plus every segment boundary.
pub fn discharge_trace(model: &SodModel, traj: &Trajectory, points: usize) -> Result<Vec<TraceRow>> {
    if points < 2 {
        return Err(invalid("points", format!("need at least 2, got {points}")));
    }
    let horizon = traj.horizon();
    let mut times: Vec<f64> = (0..points)
        .map(|k| horizon * k as f64 / (points - 1) as f64)
        .chain(traj.segments().iter().map(|s| s.start))
        .chain(std::iter::once(horizon))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();

    let segments = traj.segments();
    let mut rows = Vec::with_capacity(times.len());
    let mut idx = 0;
    let mut active_before = 0.0;
    for time in times {
        while idx + 1 < segments.len() && segments[idx + 1].start <= time {
            if segments[idx].state == NodeState::On {
                active_before += segments[idx].duration;
            }
            idx += 1;
        }
        let seg = &segments[idx];
        let (active_time, current) = match seg.state {
            NodeState::On => {
                let active = active_before + (time - seg.start).min(seg.duration);
                (active, model.k * (-active / model.tau).exp())
            }
            NodeState::Off => (active_before, 0.0),
        };
        rows.push(TraceRow {
            time,
            sod: model.sod_at(active_time),
            active_time,
            current,
        });
    }
    Ok(rows)
}

/// CSV `time,sod,active_time,current`.
pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("time,sod,active_time,current\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.time, r.sod, r.active_time, r.current));
    }
    out
}
