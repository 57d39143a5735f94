use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use manet_energy::{run_scenario, ScenarioConfig, ScenarioOutcome};
use rayon::prelude::*;

use crate::output::{directory, join, write_atomic, Header};
use crate::RouteArgs;

fn load(args: &RouteArgs) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = ScenarioConfig::parse(&text)
        .with_context(|| format!("invalid config {}", args.config.display()))?;
    if let Some(beta) = args.beta {
        cfg.beta = beta;
    }
    if args.seed.is_some() || args.replications.is_some() {
        let current = cfg.seed_list()?;
        cfg.seed = args.seed.unwrap_or(current[0]);
        cfg.replications = Some(args.replications.unwrap_or(current.len()));
        cfg.seeds.clear();
    }
    cfg.validate().context("invalid overrides")?;
    Ok(cfg)
}

fn header(cfg: &ScenarioConfig, args: &RouteArgs) -> Header {
    Header::new("route")
        .param("config", args.config.display())
        .param("beta", cfg.beta)
        .param("horizon", cfg.horizon)
        .param("hello_period", cfg.hello_period)
}

fn metrics_csv(header: Header, rows: &[(String, String)]) -> String {
    let mut text = header.render();
    text.push_str("metric,value\n");
    for (k, v) in rows {
        text.push_str(&format!("{k},{v}\n"));
    }
    text
}

fn aggregate(cfg: &ScenarioConfig, outcomes: &[ScenarioOutcome]) -> Result<Vec<(String, String)>> {
    let mut rows = vec![("replications".to_string(), outcomes.len().to_string())];
    let names: Vec<&str> = outcomes[0].metrics.rows().iter().map(|(k, _)| *k).collect();
    for (i, name) in names.into_iter().enumerate() {
        let values: Vec<f64> = outcomes
            .iter()
            .map(|o| o.metrics.rows()[i].1)
            .filter(|v| !v.is_nan())
            .collect();
        let mean = if values.is_empty() {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        };
        rows.push((name.to_string(), mean.to_string()));
    }
    for (id, d) in cfg.activation_durations()? {
        let value = d.map_or_else(|| "never".to_string(), |d| d.to_string());
        rows.push((format!("activation_duration[{id}]"), value));
    }
    Ok(rows)
}

fn write_all(dir: &Path, files: &[(PathBuf, String)]) -> Result<()> {
    let mut written = Vec::new();
    for (path, text) in files {
        if let Err(e) = write_atomic(path, text) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e.context(format!("removed partial outputs in {}", dir.display())));
        }
        written.push(path.clone());
    }
    Ok(())
}

pub fn run(out_dir: Option<&Path>, args: &RouteArgs) -> Result<()> {
    let cfg = load(args)?;
    let seeds = cfg.seed_list()?;
    let mut outcomes = seeds
        .par_iter()
        .map(|&seed| run_scenario(&cfg, seed).with_context(|| format!("seed {seed}")))
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by_key(|o| o.seed);

    let dir = directory(out_dir.or(cfg.output_dir.as_deref()))?;
    let mut files = Vec::new();
    for o in &outcomes {
        let h = header(&cfg, args).param("seed", o.seed);
        files.push((
            dir.join(format!("events_seed{}.csv", o.seed)),
            h.render() + &o.events_csv(),
        ));
        let rows: Vec<(String, String)> = o
            .metrics
            .rows()
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        files.push((
            dir.join(format!("metrics_seed{}.csv", o.seed)),
            metrics_csv(header(&cfg, args).param("seed", o.seed), &rows),
        ));
    }
    let seed_list: Vec<u64> = outcomes.iter().map(|o| o.seed).collect();
    files.push((
        dir.join("metrics.csv"),
        metrics_csv(
            header(&cfg, args)
                .param("seeds", join(&seed_list))
                .param("aggregate", "mean over replications"),
            &aggregate(&cfg, &outcomes)?,
        ),
    ));
    write_all(&dir, &files)
}
