use std::path::PathBuf;

use clap::Args;

use r2g_core::grasping::{precompute_grasps, GraspConfig};

use crate::inputs::{load_mesh, read_config, GRASPS_SUFFIX};
use crate::{CmdResult, Classify, Failure};

#[derive(Debug, Args)]
pub struct GraspsArgs {
    /// Metric meshes (OBJ).
    #[arg(long = "mesh", required = true)]
    pub meshes: Vec<PathBuf>,
    /// Grasps go to `<out>/<mesh id>.grasps.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with grasp settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub friction: Option<f64>,
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: GraspsArgs) -> CmdResult {
    let mut config: GraspConfig = read_config(args.config.as_deref())?;
    config.samples = args.samples.unwrap_or(config.samples);
    config.friction_coefficient = args.friction.unwrap_or(config.friction_coefficient);
    config.top_n = args.top_n.unwrap_or(config.top_n);
    config.seed = args.seed.unwrap_or(config.seed);
    let meshes = args.meshes.iter().map(|p| load_mesh(p)).collect::<CmdResult<Vec<_>>>()?;
    std::fs::create_dir_all(&args.out).runtime(format!("creating {}", args.out.display()))?;
    let mut written = 0;
    for mesh in &meshes {
        match precompute_grasps(mesh, &config) {
            Ok(set) => {
                let path = args.out.join(format!("{}{GRASPS_SUFFIX}", mesh.id));
                set.save(&path).runtime(format!("writing {}", path.display()))?;
                println!("{}: {} grasps", mesh.id, set.grasps.len());
                written += 1;
            }
            Err(e) => eprintln!("{}: {e}", mesh.id),
        }
    }
    if written == 0 {
        return Err(Failure::Runtime(anyhow::anyhow!("no mesh has a feasible grasp")));
    }
    Ok(())
}
