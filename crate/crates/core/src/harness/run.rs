//! Subcommand dispatch behind the `ldp` binary. Every command reads a
//! config, writes its artifacts into an output directory and returns a
//! JSON summary.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::Config;
use super::{ldp_curve, LdpOptions, TiltPolicy};
use crate::action::rate_functional;
use crate::coefficients::{modify, Rule};
use crate::error::{LdpError, Result};
use crate::path::GridPath;
use crate::pathopt::minimize_action;
use crate::simulate::{
    euler_maruyama, patchwork_sample, terminal_values, write_terminal_dump, Sampler, SimConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Tabulate the raw and modified coefficients, `S`, `Sigma` and `B_bar`.
    Coeffs,
    /// Action of the path stored in a `t,f` CSV.
    Action {
        path: PathBuf,
    },
    Minimize,
    Simulate,
    Verify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coeffs => "coeffs",
            Command::Action { .. } => "action",
            Command::Minimize => "minimize",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Overrides `experiment.seed`.
    pub seed: Option<u64>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub command: &'static str,
    pub artifacts: Vec<PathBuf>,
    pub summary: Value,
}

/// Loads `config` and runs `command`.
pub fn run_experiment(command: &Command, config: &Path, opts: &RunOptions) -> Result<RunOutput> {
    run_with_config(command, &Config::load(config)?, opts)
}

pub fn run_with_config(command: &Command, config: &Config, opts: &RunOptions) -> Result<RunOutput> {
    fs::create_dir_all(&opts.out)
        .map_err(|e| LdpError::Io(format!("{}: {e}", opts.out.display())))?;
    let seed = opts
        .seed
        .or_else(|| config.experiment.as_ref().map(|e| e.seed))
        .unwrap_or(0);
    let mut artifacts = Vec::new();
    let summary = match command {
        Command::Coeffs => coeffs(config, &opts.out, &mut artifacts)?,
        Command::Action { path } => action(config, path, &opts.out, &mut artifacts)?,
        Command::Minimize => minimize(config, seed, &opts.out, &mut artifacts)?,
        Command::Simulate => simulate(config, seed, &opts.out, &mut artifacts)?,
        Command::Verify => verify(config, seed, &opts.out, &mut artifacts)?,
    };
    Ok(RunOutput {
        command: command.name(),
        artifacts,
        summary,
    })
}

/// Machine-readable error object printed by the CLI.
pub fn error_json(err: &LdpError) -> Value {
    let mut obj = json!({
        "error": {
            "kind": err.kind(),
            "message": err.to_string(),
        }
    });
    let inner = &mut obj["error"];
    match err {
        LdpError::Config { path, .. } => inner["path"] = json!(path),
        LdpError::Model(cause) => inner["cause"] = json!(cause.kind()),
        _ => {}
    }
    obj
}

fn create(out: &Path, name: &str, artifacts: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = out.join(name);
    let file = File::create(&path).map_err(|e| LdpError::Io(format!("{}: {e}", path.display())))?;
    artifacts.push(path);
    Ok(BufWriter::new(file))
}

fn write_json(
    out: &Path,
    name: &str,
    value: &impl Serialize,
    artifacts: &mut Vec<PathBuf>,
) -> Result<()> {
    let mut w = create(out, name, artifacts)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| LdpError::Io(e.to_string()))?;
    std::io::Write::write_all(&mut w, b"\n")?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

fn coeffs(config: &Config, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<Value> {
    let model = config.sde_model()?;
    let pair = modify(model.drift(), model.diffusion());
    let bps = pair.breakpoints();
    let lo = bps.first().copied().unwrap_or(0.0).min(model.x0()) - 1.0;
    let hi = bps.last().copied().unwrap_or(0.0).max(model.x0()) + 1.0;
    let mut grid: Vec<f64> = (0..=200)
        .map(|i| lo + (hi - lo) * i as f64 / 200.0)
        .collect();
    grid.extend_from_slice(bps);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut w = csv::Writer::from_writer(create(out, "coeffs.csv", artifacts)?);
    w.write_record([
        "x",
        "a",
        "sigma",
        "a_bar",
        "sigma_bar",
        "S",
        "Sigma",
        "B_bar",
        "rule",
    ])?;
    for &x in &grid {
        let rule = pair
            .provenance()
            .iter()
            .find(|c| c.z == x)
            .map(|c| c.rule.as_str())
            .unwrap_or("");
        w.write_record([
            x.to_string(),
            model.drift().eval(x).to_string(),
            model.diffusion().eval(x).to_string(),
            pair.drift(x).to_string(),
            pair.diffusion(x).to_string(),
            pair.s_transform(x).to_string(),
            pair.sigma_transform(x).to_string(),
            pair.b_bar(x).to_string(),
            rule.to_string(),
        ])?;
    }
    w.flush()?;
    write_json(out, "provenance.json", &pair.provenance(), artifacts)?;
    let sticky = pair
        .provenance()
        .iter()
        .filter(|c| c.rule == Rule::Sticky)
        .count();
    Ok(json!({ "breakpoints": bps, "sticky_points": sticky, "rows": grid.len() }))
}

fn action(config: &Config, path: &Path, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<Value> {
    let model = config.sde_model()?;
    let pair = modify(model.drift(), model.diffusion());
    let f = GridPath::load(path)?;
    let b = rate_functional(&pair, &f, model.x0());
    write_json(out, "action.json", &b, artifacts)?;
    Ok(serde_json::to_value(b).map_err(|e| LdpError::Io(e.to_string()))?)
}

fn minimize(config: &Config, seed: u64, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<Value> {
    let model = config.sde_model()?;
    let pair = modify(model.drift(), model.diffusion());
    let event = config.event()?;
    let res = minimize_action(&model, &pair, &event, &config.minimize_options(seed))?;
    write_json(out, "minimize.json", &res, artifacts)?;
    res.argmin
        .write_csv(create(out, "argmin.csv", artifacts)?)?;
    Ok(json!({ "value": res.value, "converged": res.converged }))
}

fn sim_config(config: &Config, eps: f64, seed: u64) -> Result<SimConfig> {
    let exp = config.experiment()?;
    SimConfig::new(config.sde_model()?, eps, exp.h, exp.n_paths, seed)
}

fn simulate(config: &Config, seed: u64, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<Value> {
    let exp = config.experiment()?;
    if exp.epsilons.is_empty() {
        return Err(LdpError::config(
            "experiment.epsilons",
            "at least one epsilon is required",
        ));
    }
    let mut rungs = Vec::new();
    for (i, &eps) in exp.epsilons.iter().enumerate() {
        let cfg = sim_config(config, eps, seed)?;
        let values = terminal_values(&cfg, exp.sampler)?;
        write_terminal_dump(
            create(out, &format!("terminal_{i}.bin"), artifacts)?,
            &values,
        )?;
        let sample = match exp.sampler {
            Sampler::EulerMaruyama => euler_maruyama(&cfg, 0)?.path,
            Sampler::Patchwork => patchwork_sample(&cfg, 0)?,
        };
        sample.write_csv(create(out, &format!("path_{i}.csv"), artifacts)?)?;
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        rungs.push(json!({ "eps": eps, "n": values.len(), "mean": mean, "variance": var }));
    }
    Ok(json!({ "sampler": exp.sampler, "rungs": rungs }))
}

/// Ladder options described by the `experiment` and `optimize` sections.
pub fn ldp_options(config: &Config, seed: u64) -> Result<LdpOptions> {
    let exp = config.experiment()?;
    Ok(LdpOptions {
        epsilons: exp.epsilons.clone(),
        n_paths: exp.n_paths,
        h: exp.h,
        seed,
        tilt: TiltPolicy {
            enabled: exp.tilt.enabled,
            always: exp.tilt.always,
            gamma: exp.tilt.gamma,
            ..TiltPolicy::default()
        },
        extrapolation: exp.extrapolation,
        optimize: config.minimize_options(seed),
        compare_unmodified: true,
    })
}

fn verify(config: &Config, seed: u64, out: &Path, artifacts: &mut Vec<PathBuf>) -> Result<Value> {
    let model = config.sde_model()?;
    let event = config.event()?;
    let report = ldp_curve(&model, &event, &ldp_options(config, seed)?)?;
    write_json(out, "report.json", &report, artifacts)?;
    report.write_csv(create(out, "ldp_curve.csv", artifacts)?)?;
    report
        .minimize
        .argmin
        .write_csv(create(out, "argmin.csv", artifacts)?)?;
    Ok(json!({
        "rate_target": report.rate_target,
        "extrapolated": report.extrapolated,
        "gap": report.gap,
        "flagged_rungs": report.flagged_rungs,
    }))
}
