use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use r2g_core::demogen::{evaluate_policy, Controller, EnvConfig, EvalReport, NoopController, PathParams, ScriptedExpert};
use r2g_core::grasping::GraspConfig;

use crate::inputs::{limit_meshes, load_pool, load_task, read_config, write_json};
use crate::{invalid, CmdResult, Classify};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ControllerKind {
    Scripted,
    Noop,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub task: String,
    #[arg(long, value_enum, default_value_t = ControllerKind::Scripted)]
    pub controller: ControllerKind,
    /// Comma-separated evaluation seeds.
    #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2])]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    /// Per-seed rows plus an aggregate row.
    #[arg(long)]
    pub csv: PathBuf,
    /// Full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub mesh_dir: Option<PathBuf>,
    #[arg(long)]
    pub n_meshes: Option<usize>,
    /// TOML file with environment settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub const CSV_HEADER: [&str; 6] = ["task", "controller", "seed", "episodes", "success_rate", "std"];
/// Seed column value of the aggregate row.
pub const AGGREGATE: &str = "aggregate";

pub fn run(args: EvalArgs) -> CmdResult {
    if args.episodes == 0 || args.seeds.is_empty() {
        return Err(invalid("need at least one seed and one episode"));
    }
    let env: EnvConfig = read_config(args.config.as_deref())?;
    let (mut task, track) = load_task(&args.task)?;
    limit_meshes(&mut task, args.n_meshes)?;
    let pool = load_pool(args.mesh_dir.as_deref(), &GraspConfig::default())?;
    let make = move || -> Box<dyn Controller> {
        match args.controller {
            ControllerKind::Scripted => Box::new(ScriptedExpert::new(PathParams::default())),
            ControllerKind::Noop => Box::new(NoopController),
        }
    };
    let report = evaluate_policy(&task, pool, track, &env, &make, &args.seeds, args.episodes)
        .runtime(format!("evaluating on {}", task.name))?;
    write_csv(&args.csv, &report)?;
    if let Some(p) = &args.json {
        write_json(p, &report)?;
    }
    println!(
        "{} / {}: {:.1} ± {:.1} %",
        report.task,
        report.controller,
        100.0 * report.mean_success_rate,
        100.0 * report.std_success_rate
    );
    Ok(())
}

pub fn write_csv(path: &Path, report: &EvalReport) -> CmdResult {
    let mut w = csv::Writer::from_path(path).runtime(format!("creating {}", path.display()))?;
    w.write_record(CSV_HEADER).runtime("writing csv")?;
    for s in &report.per_seed {
        w.write_record([
            report.task.clone(),
            report.controller.clone(),
            s.seed.to_string(),
            s.episodes.to_string(),
            s.success_rate.to_string(),
            String::new(),
        ])
        .runtime("writing csv")?;
    }
    w.write_record([
        report.task.clone(),
        report.controller.clone(),
        AGGREGATE.to_string(),
        (report.episodes_per_seed * report.per_seed.len()).to_string(),
        report.mean_success_rate.to_string(),
        report.std_success_rate.to_string(),
    ])
    .runtime("writing csv")?;
    w.flush().runtime(format!("writing {}", path.display()))
}
