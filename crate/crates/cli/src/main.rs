//! Experiment runner: toy hypothesis fitting, the car-pedestrian two-stage
//! protocol, the lane-anchor ablation grid, frozen-checkpoint evaluation and
//! plot re-rendering. Every subcommand is deterministic per (config, seed)
//! and writes metrics.csv, report.json and manifest.json into the output
//! directory.

mod config;
mod manifest;
mod runners;
mod svg;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use lanecast::objectives::ObjectiveKind;
use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "lanecast", version, about = "multi-hypothesis lane forecasting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// TOML experiment config; omitted fields use the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Objective variant; restricts multi-variant experiments to one.
    #[arg(long)]
    objective: Option<ObjectiveKind>,
    /// Number of hypotheses M.
    #[arg(long)]
    hypotheses: Option<usize>,
    /// Iterations between EWTA halvings / DAC splits.
    #[arg(long)]
    split_interval: Option<usize>,
    /// Residual weight for RWTA non-winners.
    #[arg(long)]
    eps: Option<f64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Fit free hypotheses on the multimodal toy fixture per variant.
    FitToy {
        #[command(flatten)]
        common: CommonOpts,
        /// Optimizer steps; 0 emits the initial hypotheses unchanged.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Train the two-stage goal model on car-pedestrian scenes per variant.
    TrainCpi {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Train the lane-anchor ablation grid and evaluate all strategies.
    TrainLanes {
        #[command(flatten)]
        common: CommonOpts,
        /// Weight of the nt-from-xy regularizer.
        #[arg(long)]
        lambda1: Option<f64>,
        /// Weight of the xy-from-nt regularizer.
        #[arg(long)]
        lambda2: Option<f64>,
    },
    /// Re-evaluate the checkpoints of a finished run.
    Eval {
        /// Directory holding manifest.json and checkpoints.
        #[arg(long)]
        run: PathBuf,
        /// Output directory (defaults to <run>/eval).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Drop samples whose past mean |n| against the top anchor exceeds
        /// this threshold (meters).
        #[arg(long)]
        filter_bad_anchors: Option<f64>,
    },
    /// Re-render SVG plots from a run's JSON artifacts.
    Plot {
        /// Directory holding run artifacts.
        #[arg(long)]
        run: PathBuf,
        /// Output directory (defaults to the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &CommonOpts) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    // flags win over the file
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(kind) = common.objective {
        cfg.objective.kind = kind;
        cfg.toy.variants = vec![kind];
        cfg.cpi.variants = vec![kind];
    }
    if let Some(m) = common.hypotheses {
        cfg.toy.hypotheses = m;
        cfg.cpi.hypotheses = m;
        cfg.lanes.hypotheses = m;
        cfg.lanes.m_select = cfg.lanes.m_select.min(m);
    }
    if let Some(interval) = common.split_interval {
        cfg.objective.split_interval = interval;
        cfg.cpi.split_interval = interval;
        cfg.lanes.split_interval = interval;
    }
    if let Some(eps) = common.eps {
        cfg.objective.eps = eps;
    }
    Ok(cfg)
}

fn finish(
    experiment: &str,
    config: &ExperimentConfig,
    out: &std::path::Path,
    started: Instant,
    results: serde_json::Value,
) -> Result<()> {
    let mut manifest = RunManifest::new(experiment, config);
    manifest.wall_clock_secs = started.elapsed().as_secs_f64();
    manifest.results = results;
    manifest.write_atomic(&out.join("manifest.json"))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let started = Instant::now();
    match cli.command {
        Command::FitToy { common, steps } => {
            let mut cfg = load_config(&common)?;
            if let Some(steps) = steps {
                cfg.toy.steps = steps;
            }
            let (_, results) = runners::fit_toy::run(&cfg, &common.out)?;
            finish("toy", &cfg, &common.out, started, results)
        }
        Command::TrainCpi { common } => {
            let cfg = load_config(&common)?;
            let (_, results) = runners::cpi::run(&cfg, &common.out)?;
            finish("cpi", &cfg, &common.out, started, results)
        }
        Command::TrainLanes {
            common,
            lambda1,
            lambda2,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(l1) = lambda1 {
                cfg.lanes.lambda1 = l1;
            }
            if let Some(l2) = lambda2 {
                cfg.lanes.lambda2 = l2;
            }
            let (_, results) = runners::lanes::run(&cfg, &common.out)?;
            finish("lanes", &cfg, &common.out, started, results)
        }
        Command::Eval {
            run,
            out,
            filter_bad_anchors,
        } => {
            let out = out.unwrap_or_else(|| run.join("eval"));
            let (_, results) = runners::eval_cmd::run(&run, &out, filter_bad_anchors)?;
            let manifest = RunManifest::load(&run.join("manifest.json"))?;
            let mut eval_manifest = RunManifest::new("eval", &manifest.config);
            eval_manifest.wall_clock_secs = started.elapsed().as_secs_f64();
            eval_manifest.results = results;
            eval_manifest.write_atomic(&out.join("manifest.json"))?;
            Ok(())
        }
        Command::Plot { run, out } => {
            let out = out.unwrap_or_else(|| run.clone());
            let emitted = runners::plot::run(&run, &out)?;
            println!("rendered {emitted} plot(s) into {}", out.display());
            Ok(())
        }
    }
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        let missing_file = err.chain().any(|cause| {
            cause
                .downcast_ref::<std::io::Error>()
                .is_some_and(|io| io.kind() == std::io::ErrorKind::NotFound)
        });
        std::process::exit(if missing_file { 2 } else { 1 });
    }
}
