use std::path::PathBuf;

use clap::{Args, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use r2g_core::alignment::{
    align_mesh, load_reference, load_views, render_views, save_reference, save_views, AlignConfig, ViewConfig,
};
use r2g_core::fixtures::{alignment_primitives, random_truth, self_alignment_case, SelfAlignmentConfig};

use crate::inputs::{load_mesh, read_config, write_json};
use crate::{invalid, CmdResult, Classify, Failure};

#[derive(Debug, Subcommand)]
pub enum AlignCommand {
    /// Align meshes against a reference observation.
    Run(RunArgs),
    /// Render hemisphere depth views of meshes for an external descriptor extractor.
    Render(RenderArgs),
    /// Write self-alignment inputs from the bundled primitives.
    Fixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Canonical meshes (OBJ); the file stem is the mesh id.
    #[arg(long = "mesh", required = true)]
    pub meshes: Vec<PathBuf>,
    /// Directory holding `<mesh id>/views.json` for every mesh.
    #[arg(long)]
    pub views_root: PathBuf,
    /// Reference manifest (`reference.json`).
    #[arg(long)]
    pub reference: PathBuf,
    /// Output directory for metric meshes and reports.
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with alignment settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Multiplier applied to every estimated scale.
    #[arg(long)]
    pub scale_correction: Option<f64>,
    /// RANSAC seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long = "mesh", required = true)]
    pub meshes: Vec<PathBuf>,
    /// Views go to `<out>/<mesh id>/`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = ViewConfig::default().n_views)]
    pub views: usize,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Serialize)]
struct FailedMesh {
    mesh_id: String,
    error: String,
}

#[derive(Debug, Serialize)]
struct Summary {
    matched: Vec<String>,
    failed: Vec<FailedMesh>,
}

pub fn run(cmd: AlignCommand) -> CmdResult {
    match cmd {
        AlignCommand::Run(a) => run_alignment(a),
        AlignCommand::Render(a) => render(a),
        AlignCommand::Fixture(a) => fixture(a),
    }
}

fn run_alignment(args: RunArgs) -> CmdResult {
    let mut config: AlignConfig = read_config(args.config.as_deref())?;
    if let Some(s) = args.scale_correction {
        config.scale_correction = s;
    }
    if let Some(seed) = args.seed {
        config.ransac.seed = seed;
    }
    if !(config.scale_correction.is_finite() && config.scale_correction > 0.0) {
        return Err(invalid("scale correction must be positive"));
    }
    let reference = load_reference(&args.reference).invalid(format!("loading {}", args.reference.display()))?;
    // load everything first so missing inputs fail before any work
    let mut jobs = Vec::new();
    for path in &args.meshes {
        let mesh = load_mesh(path)?;
        let manifest = args.views_root.join(&mesh.id).join("views.json");
        let (_, views) = load_views(&manifest).invalid(format!("loading views of {}", mesh.id))?;
        jobs.push((mesh, views));
    }
    std::fs::create_dir_all(&args.out).runtime(format!("creating {}", args.out.display()))?;
    let mut summary = Summary {
        matched: Vec::new(),
        failed: Vec::new(),
    };
    for (mesh, views) in &jobs {
        match align_mesh(mesh, views, &reference, &config) {
            Ok(res) => {
                let obj = args.out.join(format!("{}.obj", mesh.id));
                res.metric_mesh.save_obj(&obj).runtime(format!("writing {}", obj.display()))?;
                write_json(&args.out.join(format!("{}.alignment.json", mesh.id)), &res.report)?;
                summary.matched.push(mesh.id.clone());
            }
            Err(e) => {
                log::warn!("{}: {e}", mesh.id);
                summary.failed.push(FailedMesh {
                    mesh_id: mesh.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    write_json(&args.out.join("alignment_summary.json"), &summary)?;
    println!("aligned {} of {} meshes", summary.matched.len(), jobs.len());
    if summary.matched.is_empty() {
        return Err(Failure::Runtime(anyhow::anyhow!("every mesh failed to align")));
    }
    Ok(())
}

fn render(args: RenderArgs) -> CmdResult {
    let config = ViewConfig {
        n_views: args.views,
        ..ViewConfig::default()
    };
    for path in &args.meshes {
        let mesh = load_mesh(path)?;
        let renders = render_views(&mesh, &config).invalid(format!("rendering {}", mesh.id))?;
        let dir = args.out.join(&mesh.id);
        save_views(&dir, &mesh.id, &renders, None).runtime(format!("writing {}", dir.display()))?;
    }
    Ok(())
}

/// `meshes/<id>.obj`, `views/<id>/`, `reference/<id>/` and `truth/<id>.json`
/// for each bundled primitive.
fn fixture(args: FixtureArgs) -> CmdResult {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    for dir in ["meshes", "truth"] {
        let d = args.out.join(dir);
        std::fs::create_dir_all(&d).runtime(format!("creating {}", d.display()))?;
    }
    for (k, mesh) in alignment_primitives().iter().enumerate() {
        let truth = random_truth(&mut rng);
        let case = self_alignment_case(mesh, truth, &SelfAlignmentConfig::default(), r2g_core::rng::derive(args.seed, k as u64))
            .runtime(format!("building fixture for {}", mesh.id))?;
        let obj = args.out.join("meshes").join(format!("{}.obj", mesh.id));
        mesh.save_obj(&obj).runtime(format!("writing {}", obj.display()))?;
        let renders: Vec<_> = case
            .views
            .iter()
            .map(|v| r2g_core::alignment::ViewRender {
                view_index: v.view_index,
                direction: v.direction,
                camera: v.camera,
                depth: v.depth.clone(),
            })
            .collect();
        let descriptors: Vec<_> = case.views.iter().map(|v| v.descriptors.clone()).collect();
        save_views(&args.out.join("views").join(&mesh.id), &mesh.id, &renders, Some(&descriptors))
            .runtime("writing views")?;
        save_reference(&args.out.join("reference").join(&mesh.id), &case.reference).runtime("writing reference")?;
        write_json(&args.out.join("truth").join(format!("{}.json", mesh.id)), &truth)?;
    }
    Ok(())
}
