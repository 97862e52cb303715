//! Loading tasks, mesh pools and config files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;

use r2g_core::demogen::{bundled, MeshPool, TaskSpec, TrajectoryTrack};
use r2g_core::grasping::{precompute_grasps, GraspConfig, GraspSet};
use r2g_core::TriMesh;

use crate::{invalid, CmdResult, Classify};

/// Suffix of stored grasp files next to their mesh.
pub const GRASPS_SUFFIX: &str = ".grasps.json";

/// A bundled task name or a TOML/JSON task file, plus its track.
pub fn load_task(name_or_path: &str) -> CmdResult<(TaskSpec, Option<TrajectoryTrack>)> {
    if let Some(t) = bundled::task_by_name(name_or_path) {
        return Ok(t);
    }
    let path = Path::new(name_or_path);
    if !path.exists() {
        return Err(invalid(format!(
            "task {name_or_path:?} is neither a file nor one of {}",
            bundled::task_names().join(", ")
        )));
    }
    let task = TaskSpec::load(path).invalid(format!("loading task {}", path.display()))?;
    let track = match (&task.has_secondary, &task.trajectory_path) {
        (false, Some(p)) => Some(TrajectoryTrack::load(p).invalid(format!("loading trajectory {}", p.display()))?),
        _ => None,
    };
    Ok((task, track))
}

/// `*.obj` files in `dir`, sorted.
pub fn obj_files(dir: &Path) -> CmdResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).invalid(format!("reading {}", dir.display()))?;
    let mut out = Vec::new();
    for e in entries {
        let p = e.invalid(format!("reading {}", dir.display()))?.path();
        if p.extension().is_some_and(|x| x == "obj") {
            out.push(p);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(invalid(format!("no .obj meshes in {}", dir.display())));
    }
    Ok(out)
}

pub fn load_mesh(path: &Path) -> CmdResult<TriMesh> {
    TriMesh::load_obj(path).invalid(format!("loading mesh {}", path.display()))
}

/// The bundled meshes, or every mesh in `mesh_dir` with its stored grasps
/// (`<id>.grasps.json`) or freshly computed ones.
pub fn load_pool(mesh_dir: Option<&Path>, grasps: &GraspConfig) -> CmdResult<Arc<MeshPool>> {
    let Some(dir) = mesh_dir else {
        return bundled::mesh_pool(grasps).map(Arc::new).runtime("building the bundled mesh pool");
    };
    let mut pool = MeshPool::new();
    for path in obj_files(dir)? {
        let mesh = load_mesh(&path)?;
        let stored = dir.join(format!("{}{GRASPS_SUFFIX}", mesh.id));
        let set = if stored.exists() {
            Some(GraspSet::load(&stored).invalid(format!("loading grasps {}", stored.display()))?)
        } else {
            match precompute_grasps(&mesh, grasps) {
                Ok(s) => Some(s),
                Err(e) => {
                    log::warn!("{}: {e}", mesh.id);
                    None
                }
            }
        };
        pool.insert(mesh, set);
    }
    Ok(Arc::new(pool))
}

/// Restricts the task to its first `n` primary meshes.
pub fn limit_meshes(task: &mut TaskSpec, n: Option<usize>) -> CmdResult {
    if let Some(n) = n {
        if n == 0 || n > task.primary_mesh_ids.len() {
            return Err(invalid(format!(
                "--n-meshes must lie in 1..={}",
                task.primary_mesh_ids.len()
            )));
        }
        task.primary_mesh_ids.truncate(n);
    }
    Ok(())
}

/// Parses a TOML config file, or returns the default when there is none.
pub fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CmdResult<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).invalid(format!("reading {}", path.display()))?;
    toml::from_str(&text).invalid(format!("parsing {}", path.display()))
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> CmdResult {
    let text = serde_json::to_string_pretty(value).runtime("serializing")?;
    std::fs::write(path, text + "\n").runtime(format!("writing {}", path.display()))
}
