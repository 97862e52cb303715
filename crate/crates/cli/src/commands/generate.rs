use std::path::PathBuf;

use clap::Args;

use r2g_core::dataset::list_episodes;
use r2g_core::demogen::{generate_dataset, Controller, GenerationConfig, PathParams, ScriptedExpert};
use r2g_core::grasping::GraspConfig;

use crate::inputs::{limit_meshes, load_pool, load_task, read_config, write_json};
use crate::{invalid, CmdResult, Classify};

/// Stats file written next to the episodes.
pub const STATS_FILE: &str = "generation_stats.json";

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Bundled task name or task file.
    #[arg(long)]
    pub task: String,
    /// Dataset directory; must not contain episodes yet.
    #[arg(long)]
    pub out: PathBuf,
    /// Successful demonstrations to store (800 unless configured).
    #[arg(long)]
    pub demos: Option<usize>,
    /// First scene seed; later attempts use the following integers.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Meshes (OBJ plus optional `<id>.grasps.json`); bundled meshes otherwise.
    #[arg(long)]
    pub mesh_dir: Option<PathBuf>,
    /// Use only the first N primary meshes of the task.
    #[arg(long)]
    pub n_meshes: Option<usize>,
    /// TOML file with generation settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: GenerateArgs) -> CmdResult {
    let mut config: GenerationConfig = read_config(args.config.as_deref())?;
    config.demos = args.demos.unwrap_or(config.demos);
    config.base_seed = args.seed.unwrap_or(config.base_seed);
    if config.demos == 0 {
        return Err(invalid("--demos must be positive"));
    }
    let (mut task, track) = load_task(&args.task)?;
    limit_meshes(&mut task, args.n_meshes)?;
    if args.out.exists() && !list_episodes(&args.out).invalid("listing the output directory")?.is_empty() {
        return Err(invalid(format!("{} already holds episodes", args.out.display())));
    }
    let pool = load_pool(args.mesh_dir.as_deref(), &GraspConfig::default())?;
    let make = || Box::new(ScriptedExpert::new(PathParams::default())) as Box<dyn Controller>;
    let stats = generate_dataset(&task, pool, track, &config, &make, &args.out)
        .runtime(format!("generating {}", task.name))?;
    write_json(&args.out.join(STATS_FILE), &stats)?;
    println!(
        "{}: {} demos from {} attempts ({:.1}% success)",
        task.name,
        stats.successes,
        stats.attempts,
        100.0 * stats.success_fraction
    );
    Ok(())
}
