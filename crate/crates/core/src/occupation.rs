//! True occupation-time law of the ON/OFF chain by dynamic programming.
//!
//! Time is cut into `N` slots of width `h`. In each slot the chain leaves
//! its current state with probability `1 - exp(-rate * h)`. A slot spent
//! wholly ON credits `h` of ON time; a slot in which the chain switches
//! credits `h/2` (the switch is placed mid-slot). ON time therefore lives
//! on the lattice `j * h/2`, `j = 0..=2N`, and the joint distribution over
//! (state, j) is propagated slot by slot.
//!
//! Unlike the closed-form density, this law has atoms at `0` (start OFF,
//! never switch) and at `t` (start ON, never switch); their masses are
//! `exp(-mu t)` and `exp(-lambda t)` exactly.

use crate::error::{invalid, Result};
use crate::occupancy::{on_time_cdf, DensityCurve, OccupancySpec};
use crate::onoff::NodeState;

/// Probability masses of total ON time on the lattice `j * unit`.
#[derive(Debug, Clone)]
pub struct OccupationLaw {
    spec: OccupancySpec,
    initial: NodeState,
    slots: usize,
    masses: Vec<f64>,
}

/// Runs the slot DP with slot width at most `step`.
pub fn exact_occupation_distribution(
    spec: &OccupancySpec,
    step: f64,
    initial: NodeState,
) -> Result<OccupationLaw> {
    let t = spec.horizon();
    if !(step > 0.0 && step <= t / 100.0) {
        return Err(invalid(
            "step",
            format!("must lie in (0, t/100] = (0, {}], got {step}", t / 100.0),
        ));
    }
    let slots = (t / step).ceil() as usize;
    let h = t / slots as f64;
    let p = spec.params();
    let leave_on = -(-p.lambda() * h).exp_m1();
    let leave_off = -(-p.mu() * h).exp_m1();
    let stay_on = (-p.lambda() * h).exp();
    let stay_off = (-p.mu() * h).exp();

    let len = 2 * slots + 1;
    let mut on = vec![0.0; len];
    let mut off = vec![0.0; len];
    match initial {
        NodeState::On => on[0] = 1.0,
        NodeState::Off => off[0] = 1.0,
    }
    let mut next_on = vec![0.0; len];
    let mut next_off = vec![0.0; len];
    for slot in 0..slots {
        let reach = 2 * slot;
        next_on[..=reach + 2].fill(0.0);
        next_off[..=reach + 2].fill(0.0);
        for j in 0..=reach {
            let (a, b) = (on[j], off[j]);
            if a != 0.0 {
                next_on[j + 2] += a * stay_on;
                next_off[j + 1] += a * leave_on;
            }
            if b != 0.0 {
                next_off[j] += b * stay_off;
                next_on[j + 1] += b * leave_off;
            }
        }
        std::mem::swap(&mut on, &mut next_on);
        std::mem::swap(&mut off, &mut next_off);
    }
    let masses = on.iter().zip(&off).map(|(a, b)| a + b).collect();
    Ok(OccupationLaw {
        spec: *spec,
        initial,
        slots,
        masses,
    })
}

impl OccupationLaw {
    pub fn spec(&self) -> &OccupancySpec {
        &self.spec
    }

    pub fn initial(&self) -> NodeState {
        self.initial
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Lattice spacing of ON time, half a slot.
    pub fn unit(&self) -> f64 {
        self.spec.horizon() / (2 * self.slots) as f64
    }

    /// Mass at ON time `j * unit()`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mass of paths that are never ON.
    pub fn atom_at_zero(&self) -> f64 {
        self.masses[0]
    }

    /// Mass of paths that are ON throughout.
    pub fn atom_at_horizon(&self) -> f64 {
        self.masses[self.masses.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        let unit = self.unit();
        self.masses
            .iter()
            .enumerate()
            .map(|(j, m)| j as f64 * unit * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let unit = self.unit();
        let mean = self.mean();
        self.masses
            .iter()
            .enumerate()
            .map(|(j, m)| (j as f64 * unit - mean).powi(2) * m)
            .sum()
    }

    /// Masses aggregated into `n_bins` equal bins of `[0, t]`. A lattice
    /// point that falls exactly on an interior bin edge is split evenly
    /// between the two bins it touches.
    pub fn bin_masses(&self, n_bins: usize) -> Vec<f64> {
        let mut bins = vec![0.0; n_bins];
        let den = 2 * self.slots;
        for (j, &m) in self.masses.iter().enumerate() {
            let num = j * n_bins;
            let bin = num / den;
            if bin >= n_bins {
                bins[n_bins - 1] += m;
            } else if num.is_multiple_of(den) && bin > 0 {
                bins[bin - 1] += 0.5 * m;
                bins[bin] += 0.5 * m;
            } else {
                bins[bin] += m;
            }
        }
        bins
    }

    /// The continuous part as a density on the interior lattice points.
    /// Atoms are excluded; see [`Self::atom_at_zero`] and
    /// [`Self::atom_at_horizon`].
    pub fn density_curve(&self) -> Result<DensityCurve> {
        let unit = self.unit();
        let last = self.masses.len() - 1;
        let grid = (1..last).map(|j| j as f64 * unit).collect();
        let values = self.masses[1..last].iter().map(|m| m / unit).collect();
        DensityCurve::new(self.spec, grid, values)
    }
}

/// Masses of the closed-form density in `n_bins` equal bins of `[0, t]`.
pub fn closed_form_bin_masses(spec: &OccupancySpec, n_bins: usize) -> Vec<f64> {
    let t = spec.horizon();
    let cdf: Vec<f64> = (0..=n_bins)
        .map(|k| {
            let theta = if k == n_bins { t } else { t * k as f64 / n_bins as f64 };
            on_time_cdf(spec, theta).expect("grid lies in [0, t]")
        })
        .collect();
    cdf.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Total-variation distance `0.5 * sum |p - q|` between binned laws.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "bin counts differ");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
