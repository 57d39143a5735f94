use std::path::Path;

use anyhow::{bail, Result};
use manet_energy::battery::{discharge_trace, trace_to_csv};
use manet_energy::{
    predict_lifetime, sample_trajectory, sod_modulated, total_on_time, NodeState, OnOffParams,
    SodModel, Trajectory,
};

use crate::output::{directory, inside, join, write_atomic, Header};
use crate::{DischargeArgs, DischargeMode};

pub fn run(out_dir: Option<&Path>, args: &DischargeArgs) -> Result<()> {
    let model = SodModel::new(args.k, args.tau, args.capacity, args.f_init)?;
    let mut header = Header::new("discharge")
        .param("mode", format!("{:?}", args.mode).to_lowercase())
        .param("k", args.k)
        .param("tau", args.tau)
        .param("capacity", args.capacity)
        .param("f_init", args.f_init);

    let traj = match args.mode {
        DischargeMode::Continuous => {
            header = header.param("horizon", args.horizon);
            Trajectory::constant(NodeState::On, args.horizon)?
        }
        DischargeMode::Modulated => {
            let params = OnOffParams::new(args.lambda, args.mu)?;
            header = header
                .param("horizon", args.horizon)
                .param("lambda", args.lambda)
                .param("mu", args.mu)
                .param("initial", args.initial)
                .param("seed", args.seed);
            sample_trajectory(&params, args.initial, args.horizon, args.seed)?
        }
        DischargeMode::Scripted => {
            if args.segments.is_empty() {
                bail!("--mode scripted needs --segments");
            }
            header = header
                .param("initial", args.initial)
                .param("segments", join(&args.segments));
            Trajectory::from_durations(args.initial, &args.segments)?
        }
    };

    let rows = discharge_trace(&model, &traj, args.points)?;
    let lifetime = predict_lifetime(&model, 1.0)?.map_or_else(|| "never".to_string(), |t| t.to_string());
    let text = header
        .param("points", args.points)
        .param("total_on_time", total_on_time(&traj))
        .param("final_sod", sod_modulated(&model, &traj).sod())
        .param("asymptote", model.asymptote().min(1.0))
        .param("lifetime", lifetime)
        .render()
        + &trace_to_csv(&rows);
    let dir = directory(out_dir)?;
    write_atomic(&inside(&dir, &args.out)?, &text)
}
