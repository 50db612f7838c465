//! Batch driver: each subcommand runs one pipeline stage against a config
//! file and an output directory of checkpoints.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use horizon_core::io::{run_stage, RunConfig, RunOptions, Stage, Workspace};

#[derive(Parser, Debug)]
#[command(name = "horizon", version, about = "Driven-dissipative polariton horizon simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Run configuration (TOML with [params], [grid], [pump], ... sections).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `output.dir` in the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; overrides `sweep.workers`.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Seed for the noise drive; overrides `seed`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Recompute stages whose checkpoints are already valid.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relax to the stationary flow and locate the horizon.
    Steady(Common),
    /// S-curves and turning points of both pump regions.
    Bistability(Common),
    /// Noise-seeded space-time spectra with plane-wave overlays.
    DispersionMap(Common),
    /// Diagonalize the Bogoliubov operator and pick the QNM.
    Bdg(Common),
    /// Probe sweep over frequency.
    Sweep(Common),
    /// Resonance fit on the sweep transmission.
    Fit(Common),
    /// Summary document and figures from existing checkpoints.
    Report(Common),
    /// Run a stage and everything it needs, or the whole pipeline.
    Run {
        #[command(flatten)]
        common: Common,
        /// Stop after this stage.
        #[arg(long, value_name = "NAME")]
        stage: Option<Stage>,
    },
}

/// Environment variable that caps the worker count.
const WORKER_CAP_VAR: &str = "HORIZON_MAX_WORKERS";

fn workers(requested: usize) -> usize {
    let cap = std::env::var(WORKER_CAP_VAR).ok().and_then(|v| v.parse::<usize>().ok()).filter(|c| *c > 0);
    let n = requested.max(1);
    cap.map_or(n, |c| n.min(c))
}

fn workspace(common: &Common) -> Result<(Workspace, RunOptions)> {
    let loaded = RunConfig::load(&common.config).with_context(|| format!("loading {}", common.config.display()))?;
    let mut config = loaded.config;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(w) = common.workers {
        config.sweep.workers = w;
    }
    if let Some(out) = &common.out {
        config.output.dir = out.clone();
    }
    config.validate()?;
    if !loaded.defaults_used.is_empty() {
        eprintln!("defaults used: {}", loaded.defaults_used.join(", "));
    }
    let options = RunOptions { workers: workers(config.sweep.workers), overwrite: common.overwrite };
    let out = config.output.dir.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok((Workspace::new(config, out), options))
}

fn execute(ws: &Workspace, options: &RunOptions, stages: &[Stage]) -> Result<()> {
    for &stage in stages {
        let report = run_stage(ws, stage, options).with_context(|| format!("stage `{stage}`"))?;
        for line in &report.lines {
            println!("{line}");
        }
        for f in &report.files {
            println!("  wrote {}", f.display());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (common, stages): (&Common, Option<Vec<Stage>>) = match &cli.command {
        Command::Steady(c) => (c, Some(vec![Stage::Steady])),
        Command::Bistability(c) => (c, Some(vec![Stage::Bistability])),
        Command::DispersionMap(c) => (c, Some(vec![Stage::DispersionMap])),
        Command::Bdg(c) => (c, Some(vec![Stage::Bdg])),
        Command::Sweep(c) => (c, Some(vec![Stage::Sweep])),
        Command::Fit(c) => (c, Some(vec![Stage::Fit])),
        Command::Report(c) => (c, Some(vec![Stage::Report])),
        Command::Run { common, .. } => (common, None),
    };
    let (ws, options) = workspace(common)?;
    let stages = match (stages, &cli.command) {
        (Some(s), _) => s,
        (None, Command::Run { stage, .. }) => ws.plan(*stage),
        _ => bail!("no stages selected"),
    };
    println!("config hash {}", ws.hash);
    execute(&ws, &options, &stages)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
