use std::path::Path;

use anyhow::{bail, Context, Result};
use manet_energy::occupancy::uncorrected_mean_on_time;
use manet_energy::occupation::{closed_form_bin_masses, total_variation};
use manet_energy::onoff::sample_on_time_with;
use manet_energy::quadrature::integrate_smooth;
use manet_energy::rng::rng_stream;
use manet_energy::stats::{chi_square_gof, histogram, MeanEstimate};
use manet_energy::{
    exact_occupation_distribution, mean_on_time, on_time_density, NodeState, OccupancySpec,
};
use rayon::prelude::*;

use crate::output::{directory, inside, write_atomic, Header};
use crate::ValidateArgs;

const DEFAULT_CASES: [(f64, f64, f64); 4] =
    [(1.0, 3.0, 4.0), (0.2, 1.0, 5.0), (2.0, 0.5, 3.0), (0.0, 1.0, 2.0)];

/// Smallest Monte Carlo sample accepted.
pub const MIN_REPLICATIONS: usize = 10_000;

pub const COLUMNS: &str = "lambda,mu,t,x,initial,density_mean,closed_form_mean,uncorrected_mean,\
exact_mean,mc_mean,mc_stderr,mc_z,tv_closed_form_exact,atom_zero,atom_horizon,chi2_p";

struct Row {
    spec: OccupancySpec,
    initial: NodeState,
    density_mean: f64,
    closed_form_mean: f64,
    uncorrected_mean: f64,
    exact_mean: f64,
    mc: MeanEstimate,
    tv: f64,
    atom_zero: f64,
    atom_horizon: f64,
    chi2_p: f64,
}

fn evaluate(
    spec: OccupancySpec,
    initial: NodeState,
    stream: u64,
    args: &ValidateArgs,
) -> Result<Row> {
    let t = spec.horizon();
    let step = args.step.unwrap_or(t / 2048.0);
    let law = exact_occupation_distribution(&spec, step, initial)?;
    let density_mean = integrate_smooth(
        |th| {
            let th = th.clamp(0.0, t);
            th * on_time_density(&spec, th).expect("theta clamped to [0, t]")
        },
        0.0,
        t,
    );

    let mut rng = rng_stream(args.seed, stream);
    let samples: Vec<f64> = (0..args.replications)
        .map(|_| sample_on_time_with(spec.params(), initial, t, &mut rng))
        .collect();
    let exact_bins = law.bin_masses(args.bins);
    let chi2 = chi_square_gof(&histogram(&samples, t, args.bins), &exact_bins);

    Ok(Row {
        spec,
        initial,
        density_mean,
        closed_form_mean: mean_on_time(&spec),
        uncorrected_mean: uncorrected_mean_on_time(&spec),
        exact_mean: law.mean(),
        mc: MeanEstimate::from_samples(&samples),
        tv: total_variation(&closed_form_bin_masses(&spec, args.bins), &exact_bins),
        atom_zero: law.atom_at_zero(),
        atom_horizon: law.atom_at_horizon(),
        chi2_p: chi2.p_value,
    })
}

pub fn run(out_dir: Option<&Path>, args: &ValidateArgs) -> Result<()> {
    if args.replications < MIN_REPLICATIONS {
        bail!("--replications must be at least {MIN_REPLICATIONS}, got {}", args.replications);
    }
    if args.bins < 2 {
        bail!("--bins must be at least 2, got {}", args.bins);
    }
    let cases = if args.cases.is_empty() {
        DEFAULT_CASES.to_vec()
    } else {
        args.cases.clone()
    };
    let mut jobs = Vec::new();
    for &(lambda, mu, t) in &cases {
        let spec = OccupancySpec::from_rates(lambda, mu, t)
            .with_context(|| format!("case {lambda},{mu},{t}"))?;
        if let Some(step) = args.step {
            if !(step > 0.0 && step <= t / 100.0) {
                bail!("--step must lie in (0, t/100] for t={t}, got {step}");
            }
        }
        for initial in [NodeState::On, NodeState::Off] {
            jobs.push((spec, initial));
        }
    }

    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(i, &(spec, initial))| evaluate(spec, initial, i as u64, args))
        .collect::<Result<Vec<_>>>()?;

    let mut text = Header::new("validate")
        .param("replications", args.replications)
        .param("step", args.step.map_or_else(|| "t/2048".to_string(), |s| s.to_string()))
        .param("bins", args.bins)
        .param("seed", args.seed)
        .render();
    text.push_str(COLUMNS);
    text.push('\n');
    for r in rows {
        let p = r.spec.params();
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            p.lambda(),
            p.mu(),
            r.spec.horizon(),
            r.spec.x(),
            r.initial,
            r.density_mean,
            r.closed_form_mean,
            r.uncorrected_mean,
            r.exact_mean,
            r.mc.mean,
            r.mc.stderr,
            r.mc.z_score(r.exact_mean),
            r.tv,
            r.atom_zero,
            r.atom_horizon,
            r.chi2_p,
        ));
    }
    let dir = directory(out_dir)?;
    write_atomic(&inside(&dir, &args.out)?, &text)
}
