use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use manet_energy::NodeState;

mod discharge;
mod figures;
mod output;
mod route;
mod validate;

/// Battery discharge, ON/OFF occupancy, and energy-aware routing experiments.
#[derive(Debug, Parser)]
#[command(name = "manet-energy", version, about)]
struct Cli {
    /// Directory every output file is written into.
    #[arg(long, global = true, env = "MANET_ENERGY_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// On-time density curves over [0, t].
    Density(DensityArgs),
    /// Mean on-time as a function of the net rate x = mu - lambda.
    MeanCurve(MeanCurveArgs),
    /// State-of-discharge trace under continuous or ON/OFF activity.
    Discharge(DischargeArgs),
    /// Closed form vs exact occupation law vs Monte Carlo.
    Validate(ValidateArgs),
    /// Run a network scenario from a config file.
    Route(RouteArgs),
}

#[derive(Debug, Args)]
struct DensityArgs {
    /// Rate of leaving ON.
    #[arg(long, conflicts_with = "x", allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Rate of leaving OFF.
    #[arg(long, conflicts_with = "x", allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Net rates, one output column each.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long, default_value = "density.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MeanCurveArgs {
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    x_min: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    x_max: f64,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value = "mean_curve.csv")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DischargeMode {
    /// Uninterrupted activity.
    Continuous,
    /// Activity sampled from the ON/OFF chain.
    Modulated,
    /// Activity given by `--segments`.
    Scripted,
}

#[derive(Debug, Args)]
struct DischargeArgs {
    #[arg(long, value_enum, default_value_t = DischargeMode::Continuous)]
    mode: DischargeMode,
    /// Initial discharge current.
    #[arg(long)]
    k: f64,
    /// Current decay constant.
    #[arg(long)]
    tau: f64,
    /// Nominal capacity.
    #[arg(long, default_value_t = 1.0)]
    capacity: f64,
    #[arg(long, default_value_t = 0.0)]
    f_init: f64,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value = "ON", value_parser = parse_state)]
    initial: NodeState,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Alternating segment durations starting in `--initial`.
    #[arg(long, value_delimiter = ',')]
    segments: Vec<f64>,
    #[arg(long, default_value = "discharge.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Parameter set `lambda,mu,t`; repeat for more rows.
    #[arg(long = "case", value_parser = parse_case)]
    cases: Vec<(f64, f64, f64)>,
    /// Monte Carlo trajectories per row.
    #[arg(long, default_value_t = 100_000)]
    replications: usize,
    /// DP time step; defaults to t/2048.
    #[arg(long)]
    step: Option<f64>,
    /// Histogram bins for the chi-square and total-variation columns.
    #[arg(long, default_value_t = 32)]
    bins: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "validate.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RouteArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run `n` replications with seeds `seed, seed + 1, ...`.
    #[arg(long)]
    replications: Option<usize>,
    /// First seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's energy weight.
    #[arg(long)]
    beta: Option<f64>,
}

fn parse_state(s: &str) -> Result<NodeState, String> {
    s.parse().map_err(|e: manet_energy::Error| e.to_string())
}

fn parse_case(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [l, m, t] = parts.as_slice() else {
        return Err(format!("expected lambda,mu,t but got `{s}`"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(l)?, num(m)?, num(t)?))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Density(a) => figures::density(cli.out_dir.as_deref(), a),
        Command::MeanCurve(a) => figures::mean_curve(cli.out_dir.as_deref(), a),
        Command::Discharge(a) => discharge::run(cli.out_dir.as_deref(), a),
        Command::Validate(a) => validate::run(cli.out_dir.as_deref(), a),
        Command::Route(a) => route::run(cli.out_dir.as_deref(), a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
