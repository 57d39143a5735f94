//! Closed-form law of the total ON time over `[0, t]`.
//!
//! Collapsing the alternating path product of sojourn survivals gives a
//! weight `exp(-lambda*T) * exp(-mu*(t - T))` for total ON time `T`. Normalized
//! over `[0, t]` this is the truncated exponential density
//!
//! ```text
//! f(theta) = x * exp(x*theta) / (exp(x*t) - 1),     x = mu - lambda
//! ```
//!
//! with CDF `(exp(x*theta) - 1) / (exp(x*t) - 1)` and mean
//! `t - 1/x + t / (exp(x*t) - 1)`. All three have a removable singularity at
//! `x = 0` where the law is uniform on `[0, t]`.
//!
//! The collapse drops the number of ways a path with a given `T` can be
//! arranged, so this law is an approximation of the true occupation time of
//! the chain; [`crate::occupation`] computes the true law for comparison.

use crate::error::{invalid, Result};
use crate::onoff::OnOffParams;

/// Below this `|x| * t` the uniform-limit branches are used.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;

// The mean loses digits to cancellation well before x*t reaches the
// singular threshold, so it switches to a series earlier.
const MEAN_SERIES_THRESHOLD: f64 = 1e-2;

/// Chain parameters plus the observation horizon `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancySpec {
    params: OnOffParams,
    horizon: f64,
}

impl OccupancySpec {
    pub fn new(params: OnOffParams, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid("horizon", format!("must be finite and > 0, got {horizon}")));
        }
        Ok(Self { params, horizon })
    }

    /// Convenience constructor from raw rates.
    pub fn from_rates(lambda: f64, mu: f64, horizon: f64) -> Result<Self> {
        Self::new(OnOffParams::new(lambda, mu)?, horizon)
    }

    pub fn params(&self) -> &OnOffParams {
        &self.params
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `x = mu - lambda`.
    pub fn x(&self) -> f64 {
        self.params.net_rate()
    }

    fn scaled_x(&self) -> f64 {
        self.x() * self.horizon
    }

    fn is_uniform(&self) -> bool {
        self.scaled_x().abs() < SINGULAR_THRESHOLD
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&theta) {
            return Err(invalid(
                "theta",
                format!("must lie in [0, {}], got {theta}", self.horizon),
            ));
        }
        Ok(())
    }
}

/// `C = (mu - lambda) / (exp(-lambda t) - exp(-mu t))`, the constant that
/// normalizes `exp(-mu t) exp(x theta)` over `[0, t]`.
pub fn normalization_constant(spec: &OccupancySpec) -> f64 {
    let t = spec.horizon;
    let lambda = spec.params.lambda();
    if spec.is_uniform() {
        return (lambda * t).exp() / t;
    }
    // exp(-lambda t) - exp(-mu t) = -exp(-lambda t) * expm1(-x t)
    let x = spec.x();
    x * (lambda * t).exp() / -(-x * t).exp_m1()
}

/// Density of the total ON time at `theta`.
pub fn on_time_density(spec: &OccupancySpec, theta: f64) -> Result<f64> {
    spec.check_theta(theta)?;
    Ok(density_unchecked(spec, theta))
}

fn density_unchecked(spec: &OccupancySpec, theta: f64) -> f64 {
    let t = spec.horizon;
    if spec.is_uniform() {
        return 1.0 / t;
    }
    let x = spec.x();
    if x > 0.0 {
        // x e^{x(theta - t)} / (1 - e^{-x t}): no overflow for large x t.
        x * (x * (theta - t)).exp() / -(-x * t).exp_m1()
    } else {
        x * (x * theta).exp() / (x * t).exp_m1()
    }
}

/// CDF of the total ON time at `theta`.
pub fn on_time_cdf(spec: &OccupancySpec, theta: f64) -> Result<f64> {
    spec.check_theta(theta)?;
    let t = spec.horizon;
    if spec.is_uniform() {
        return Ok(theta / t);
    }
    let x = spec.x();
    let value = if x > 0.0 {
        (x * (theta - t)).exp() * (-x * theta).exp_m1() / (-x * t).exp_m1()
    } else {
        (x * theta).exp_m1() / (x * t).exp_m1()
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Mean total ON time, `t - 1/x + t/(exp(x t) - 1)`, `t/2` at `x = 0`.
pub fn mean_on_time(spec: &OccupancySpec) -> f64 {
    let t = spec.horizon;
    let u = spec.scaled_x();
    if u.abs() < MEAN_SERIES_THRESHOLD {
        // t * (1 - 1/u + 1/(e^u - 1)) expanded with Bernoulli numbers.
        let u2 = u * u;
        return t * (0.5 + u * (1.0 / 12.0 - u2 * (1.0 / 720.0 - u2 / 30_240.0)));
    }
    // Mean fraction for net rate -|u|; reflecting theta -> t - theta gives
    // the positive side.
    let low = 1.0 / u.abs() - 1.0 / u.abs().exp_m1();
    if u > 0.0 {
        t * (1.0 - low)
    } else {
        t * low
    }
}

/// Mean formula with `+1/x` in place of `-1/x`.
///
/// It disagrees with the integral of `theta * f(theta)` and diverges like
/// `2/x` as `x -> 0` instead of tending to `t/2`. Kept only so the
/// discrepancy stays under test.
pub fn uncorrected_mean_on_time(spec: &OccupancySpec) -> f64 {
    let t = spec.horizon;
    let x = spec.x();
    (x * t + 1.0) / x + t / (x * t).exp_m1()
}

/// Density sampled on a grid of `[0, t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCurve {
    spec: OccupancySpec,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl DensityCurve {
    /// Wraps precomputed samples; the grid must be strictly increasing and
    /// the values non-negative.
    pub fn new(spec: OccupancySpec, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(invalid("values", "grid and values differ in length"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid", "must be strictly increasing"));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(invalid("values", "densities must be >= 0"));
        }
        Ok(Self { spec, grid, values })
    }

    pub fn spec(&self) -> &OccupancySpec {
        &self.spec
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoid-rule integral over the grid.
    pub fn trapezoid(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum()
    }

    /// CSV `theta,density` with `#` comment lines recording the parameters.
    pub fn to_csv(&self) -> String {
        let p = self.spec.params();
        let mut out = format!(
            "# lambda={}\n# mu={}\n# t={}\n# x={}\ntheta,density\n",
            p.lambda(),
            p.mu(),
            self.spec.horizon(),
            self.spec.x()
        );
        for (theta, value) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{theta},{value}\n"));
        }
        out
    }
}

/// `n_points` equally spaced nodes on `[0, t]`, endpoints included exactly.
pub fn uniform_grid(horizon: f64, n_points: usize) -> Vec<f64> {
    let last = n_points - 1;
    (0..n_points)
        .map(|k| {
            if k == last {
                horizon
            } else {
                horizon * k as f64 / last as f64
            }
        })
        .collect()
}

/// Evaluates the density on a uniform grid of `n_points` over `[0, t]`.
pub fn density_curve(spec: &OccupancySpec, n_points: usize) -> Result<DensityCurve> {
    if n_points < 2 {
        return Err(invalid("n_points", format!("need at least 2, got {n_points}")));
    }
    let grid = uniform_grid(spec.horizon, n_points);
    let values = grid.iter().map(|&th| density_unchecked(spec, th)).collect();
    DensityCurve::new(*spec, grid, values)
}
