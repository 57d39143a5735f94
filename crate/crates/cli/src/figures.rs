use std::path::Path;

use anyhow::{bail, Context, Result};
use manet_energy::occupancy::uniform_grid;
use manet_energy::{density_curve, mean_on_time, on_time_density, OccupancySpec};

use crate::output::{directory, inside, join, write_atomic, Header};
use crate::{DensityArgs, MeanCurveArgs};

/// Fewest grid points accepted for a figure curve.
const MIN_POINTS: usize = 100;

/// Spec with net rate `x`, putting all of it on one side.
pub fn spec_for_x(x: f64, horizon: f64) -> manet_energy::Result<OccupancySpec> {
    OccupancySpec::from_rates((-x).max(0.0), x.max(0.0), horizon)
}

fn check_points(points: usize) -> Result<()> {
    if points < MIN_POINTS {
        bail!("--points must be at least {MIN_POINTS}, got {points}");
    }
    Ok(())
}

pub fn density(out_dir: Option<&Path>, args: &DensityArgs) -> Result<()> {
    check_points(args.points)?;
    let text = if args.x.is_empty() {
        let (Some(lambda), Some(mu)) = (args.lambda, args.mu) else {
            bail!("give either --x or both --lambda and --mu");
        };
        let spec = OccupancySpec::from_rates(lambda, mu, args.horizon)?;
        let curve = density_curve(&spec, args.points)?;
        Header::new("density")
            .param("points", args.points)
            .render()
            + &curve.to_csv()
    } else {
        let specs = args
            .x
            .iter()
            .map(|&x| spec_for_x(x, args.horizon).with_context(|| format!("x={x}")))
            .collect::<Result<Vec<_>>>()?;
        let mut text = Header::new("density")
            .param("t", args.horizon)
            .param("x", join(&args.x))
            .param("points", args.points)
            .render();
        text.push_str("theta");
        for x in &args.x {
            text.push_str(&format!(",x={x}"));
        }
        text.push('\n');
        for theta in uniform_grid(args.horizon, args.points) {
            text.push_str(&theta.to_string());
            for spec in &specs {
                text.push_str(&format!(",{}", on_time_density(spec, theta)?));
            }
            text.push('\n');
        }
        text
    };
    let dir = directory(out_dir)?;
    write_atomic(&inside(&dir, &args.out)?, &text)
}

pub fn mean_curve(out_dir: Option<&Path>, args: &MeanCurveArgs) -> Result<()> {
    check_points(args.points)?;
    if !(args.x_min.is_finite() && args.x_max.is_finite() && args.x_min < args.x_max) {
        bail!("need finite --x-min < --x-max, got {} and {}", args.x_min, args.x_max);
    }
    let step = (args.x_max - args.x_min) / (args.points - 1) as f64;
    let mut text = Header::new("mean-curve")
        .param("t", args.horizon)
        .param("x_min", args.x_min)
        .param("x_max", args.x_max)
        .param("points", args.points)
        .render();
    text.push_str("x,mean_on_time\n");
    for i in 0..args.points {
        let x = if i + 1 == args.points {
            args.x_max
        } else {
            args.x_min + step * i as f64
        };
        let spec = spec_for_x(x, args.horizon).with_context(|| format!("x={x}"))?;
        text.push_str(&format!("{x},{}\n", mean_on_time(&spec)));
    }
    let dir = directory(out_dir)?;
    write_atomic(&inside(&dir, &args.out)?, &text)
}
