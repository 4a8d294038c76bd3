use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use smallnoise_core::analysis::{remainder, run_order_study, OrderFitResult};
use smallnoise_core::expansion::expand;
use smallnoise_core::levy::{derive_seed, sample_path, LevyPath};
use smallnoise_core::problem::Problem;
use smallnoise_core::solvers::{solve_deterministic, solve_sde, Trajectory};
use smallnoise_core::validation::{run_suites, Check, ValidationOptions};

use crate::config::{ExperimentConfig, ValidationReport};
use crate::io;

pub const VERSION_TAG: &str = concat!("smallnoise ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Expand,
    OrderStudy,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Expand => "expand",
            Command::OrderStudy => "order-study",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Serialize)]
struct SeedInfo {
    master_seed: u64,
    /// Stream id of each path; it does not depend on the noise level.
    stream: &'static str,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    command: &'static str,
    version: &'static str,
    status: &'static str,
    passed: bool,
    error: Option<String>,
    config: &'a ExperimentConfig,
    validation: Option<&'a ValidationReport>,
    seeds: SeedInfo,
    outputs: Vec<String>,
    results: serde_json::Value,
}

/// What a finished command produced.
pub struct Outcome {
    pub passed: bool,
    pub outputs: Vec<PathBuf>,
    pub results: serde_json::Value,
}

/// Runs `cmd`, writing artifacts and `summary.json` under the configured
/// output directory. On failure the summary is still written, marked failed.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig) -> Result<bool> {
    let out = PathBuf::from(&cfg.output.directory);
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let built = cfg.build();
    let report = built.as_ref().ok().map(|(_, r)| r.clone());
    let result = built.and_then(|(problem, _)| match cmd {
        Command::Simulate => simulate(&problem, cfg, &out),
        Command::Expand => expansion(&problem, cfg, &out),
        Command::OrderStudy => order_study(&problem, cfg, &out),
        Command::Validate => validate(&problem, cfg),
    });
    let (status, passed, error, outputs, results) = match &result {
        Ok(o) => (
            "ok",
            o.passed,
            None,
            o.outputs.iter().map(|p| p.display().to_string()).collect(),
            o.results.clone(),
        ),
        Err(e) => ("failed", false, Some(format!("{e:#}")), Vec::new(), serde_json::Value::Null),
    };
    let summary = Summary {
        command: cmd.name(),
        version: VERSION_TAG,
        status,
        passed,
        error,
        config: cfg,
        validation: report.as_ref(),
        seeds: SeedInfo {
            master_seed: cfg.run.master_seed,
            stream: "path index",
        },
        outputs,
        results,
    };
    io::write_json(&out.join("summary.json"), &summary)?;
    result.map(|o| o.passed)
}

fn path_for(problem: &Problem, master: u64, index: u64) -> Result<LevyPath> {
    let mut rng = derive_seed(master, index, 0).rng();
    Ok(sample_path(&problem.noise, problem.horizon, &mut rng)?)
}

fn simulate(problem: &Problem, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let (bundle, f, q, u0) = (&problem.bundle, &problem.nonlinearity, &problem.q, &problem.u0);
    let eps = cfg.run.epsilon;
    let phi = solve_deterministic(bundle, f, u0, problem.horizon)?;
    let runs: Vec<(LevyPath, Trajectory)> = (0..cfg.run.paths as u64)
        .into_par_iter()
        .map(|i| {
            let path = path_for(problem, cfg.run.master_seed, i)?;
            let u = solve_sde(bundle, f, q, eps, u0, &path)?;
            Ok((path, u))
        })
        .collect::<Result<_>>()?;
    let phi_csv = out.join("phi.csv");
    io::write_trajectories(&phi_csv, &[("phi".into(), &phi)], cfg.output.stride)?;
    let labelled: Vec<(String, &Trajectory)> =
        runs.iter().enumerate().map(|(i, (_, u))| (format!("path_{i}"), u)).collect();
    let u_csv = out.join("u_eps.csv");
    io::write_trajectories(&u_csv, &labelled, cfg.output.stride)?;
    let jumps: Vec<(String, &LevyPath)> =
        runs.iter().enumerate().map(|(i, (p, _))| (format!("path_{i}"), p)).collect();
    let jumps_csv = out.join("jumps.csv");
    io::write_jumps(&jumps_csv, &jumps)?;
    let sups: Vec<f64> = runs.iter().map(|(_, u)| u.sup_norm()).collect();
    info!("simulated {} paths at epsilon {eps}", runs.len());
    Ok(Outcome {
        passed: true,
        outputs: vec![phi_csv, u_csv, jumps_csv],
        results: serde_json::json!({
            "epsilon": eps,
            "paths": runs.len(),
            "phi_sup_norm": phi.sup_norm(),
            "u_eps_sup_norms": sups,
            "jump_counts": runs.iter().map(|(p, _)| p.jump_count()).collect::<Vec<_>>(),
        }),
    })
}

fn expansion(problem: &Problem, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let (bundle, f, q, u0) = (&problem.bundle, &problem.nonlinearity, &problem.q, &problem.u0);
    let eps = cfg.run.epsilon;
    let path = path_for(problem, cfg.run.master_seed, cfg.run.path_index)?;
    let set = expand(bundle, f, q, u0, &path, cfg.run.n)?;
    let u = solve_sde(bundle, f, q, eps, u0, &path)?;
    let r = remainder(&u, &set, eps)?;
    let mut rows: Vec<(String, &Trajectory)> = vec![("phi".into(), set.phi())];
    rows.extend(set.terms().iter().enumerate().map(|(k, t)| (format!("u{}", k + 1), t)));
    rows.push(("u_eps".into(), &u));
    rows.push(("remainder".into(), &r));
    let csv = out.join("expansion.csv");
    io::write_trajectories(&csv, &rows, cfg.output.stride)?;
    let jumps_csv = out.join("jumps.csv");
    io::write_jumps(&jumps_csv, &[(format!("path_{}", cfg.run.path_index), &path)])?;
    Ok(Outcome {
        passed: true,
        outputs: vec![csv, jumps_csv],
        results: serde_json::json!({
            "epsilon": eps,
            "order": set.order(),
            "path_index": cfg.run.path_index,
            "jump_count": path.jump_count(),
            "term_sup_norms": set.terms().iter().map(|t| t.sup_norm()).collect::<Vec<_>>(),
            "sup_remainder": r.sup_norm(),
        }),
    })
}

#[derive(Serialize)]
struct StudyResults<'a> {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    sup_fit: &'a OrderFitResult,
    sup_target: f64,
    moment_fit: &'a OrderFitResult,
    moment_target: f64,
    monotone_violation_fraction: f64,
    meets_order_target: bool,
}

fn order_study(problem: &Problem, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let study = run_order_study(problem, &cfg.study_config())?;
    let study_csv = out.join("order_study.csv");
    io::write_study(&study_csv, &study)?;
    let sups_csv = out.join("sups.csv");
    io::write_sups(&sups_csv, &study)?;
    let fit = &study.sup_fit;
    let meets = fit.slope >= study.sup_target - 0.2;
    info!(
        "sup-norm slope {:.4} (target {}), moment slope {:.4} (target {})",
        fit.slope, study.sup_target, study.moment_fit.slope, study.moment_target
    );
    let results = StudyResults {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        sup_fit: fit,
        sup_target: study.sup_target,
        moment_fit: &study.moment_fit,
        moment_target: study.moment_target,
        monotone_violation_fraction: study.monotone_violation_fraction,
        meets_order_target: meets,
    };
    Ok(Outcome {
        passed: meets,
        outputs: vec![study_csv, sups_csv],
        results: serde_json::to_value(results)?,
    })
}

fn validate(problem: &Problem, cfg: &ExperimentConfig) -> Result<Outcome> {
    let opts = ValidationOptions {
        pairs: 1000,
        master_seed: cfg.run.master_seed,
    };
    let checks: Vec<Check> = run_suites(problem, &opts)?;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(Outcome {
        passed: checks.iter().all(|c| c.passed),
        outputs: Vec::new(),
        results: serde_json::to_value(&checks)?,
    })
}
