use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use smallnoise_cli::{parse_config, run_command, Command};

#[derive(Parser)]
#[command(name = "smallnoise", version, about = "Small-noise expansions of jump-driven dissipative systems")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Deterministic trajectory and noisy paths at `run.epsilon`.
    Simulate(Common),
    /// Expansion terms, noisy solution and remainder on one path.
    Expand(Common),
    /// Monte Carlo measurement of the remainder order in epsilon.
    OrderStudy(Common),
    /// Property suites on the configured problem.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; defaults to the FitzHugh–Nagumo preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `run.master_seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cmd: Command, common: Common) -> Result<bool> {
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(out) = common.out {
        cfg.output.directory = out.display().to_string();
    }
    if let Some(seed) = common.seed {
        cfg.run.master_seed = seed;
    }
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    run_command(cmd, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Expand(c) => (Command::Expand, c),
        Sub::OrderStudy(c) => (Command::OrderStudy, c),
        Sub::Validate(c) => (Command::Validate, c),
    };
    match run(cmd, common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}: one or more properties failed", cmd.name());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
