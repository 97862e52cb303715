//! Built-in tasks and meshes: small boxes placed into a tray, and a single
//! box carried sideways along a recorded track.

use std::path::PathBuf;

use rayon::prelude::*;

use super::{DemogenError, MeshPool, SuccessCriteria, TaskSpec, TrackFrame, TrajectoryTrack, Workspace};
use crate::geometry::{primitives, Pose, TriMesh, Vec3};
use crate::grasping::{precompute_grasps, GraspConfig};

pub const BOX_ON_TRAY: &str = "box_on_tray";
pub const BOX_SHIFT: &str = "box_shift";
pub const TRAY_ID: &str = "tray";

/// Sizes in meters, x by y by z.
const BOX_SIZES: [(&str, [f64; 3]); 5] = [
    ("box_cube5", [0.05, 0.05, 0.05]),
    ("box_flat6", [0.06, 0.04, 0.04]),
    ("box_tall6", [0.04, 0.04, 0.06]),
    ("box_long7", [0.07, 0.035, 0.03]),
    ("box_slab5", [0.045, 0.03, 0.05]),
];

/// Boxes resting on z = 0 with their centroid on the z axis.
pub fn box_meshes() -> Vec<TriMesh> {
    BOX_SIZES
        .iter()
        .map(|(id, [x, y, z])| {
            primitives::cuboid_between(id, Vec3::new(-x / 2.0, -y / 2.0, 0.0), Vec3::new(x / 2.0, y / 2.0, *z))
        })
        .collect()
}

/// 26 cm square tray, 4 cm walls 1 cm thick, 5 mm floor.
pub fn tray_mesh() -> TriMesh {
    primitives::tray(TRAY_ID, Vec3::new(0.26, 0.26, 0.04), 0.01, 0.005)
}

fn box_ids() -> Vec<String> {
    BOX_SIZES.iter().map(|(id, _)| id.to_string()).collect()
}

fn workspace() -> Workspace {
    Workspace {
        x: [0.3, 0.8],
        y: [-0.35, 0.35],
    }
}

pub fn box_on_tray_task() -> TaskSpec {
    TaskSpec {
        name: BOX_ON_TRAY.into(),
        has_secondary: true,
        primary_mesh_ids: box_ids(),
        secondary_mesh_ids: vec![TRAY_ID.into()],
        trajectory_path: None,
        generation_success: SuccessCriteria::position(0.15),
        evaluation_success: SuccessCriteria::position(0.15),
        workspace: workspace(),
        bottleneck_height: 0.15,
    }
}

/// Single-object task replaying [`box_shift_track`].
pub fn box_shift_task() -> TaskSpec {
    let mut criteria = SuccessCriteria::position(0.02);
    criteria.rotation_threshold = Some(10.0);
    TaskSpec {
        name: BOX_SHIFT.into(),
        has_secondary: false,
        primary_mesh_ids: box_ids(),
        secondary_mesh_ids: Vec::new(),
        trajectory_path: Some(PathBuf::from("box_shift_track.json")),
        generation_success: criteria,
        evaluation_success: criteria,
        workspace: Workspace {
            x: [0.35, 0.75],
            y: [-0.3, 0.2],
        },
        bottleneck_height: 0.15,
    }
}

/// Lift 8 cm, carry 10 cm along +y while turning a quarter turn about the
/// vertical, then set down.
pub fn box_shift_track() -> TrajectoryTrack {
    let n = 20;
    let mut poses = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let lift = 0.08 * (4.0 * t).min(4.0 * (1.0 - t)).min(1.0);
        let pose = Pose::from_xyz_yaw(Vec3::new(0.0, 0.10 * t, lift), std::f64::consts::FRAC_PI_2 * t);
        poses.push(pose);
    }
    let timestamps = (0..=n).map(|k| k as f64 * 0.1).collect();
    TrajectoryTrack::new(poses, timestamps, TrackFrame::World).expect("valid track")
}

/// Every bundled mesh with grasps precomputed under `config`.
pub fn mesh_pool(config: &GraspConfig) -> Result<MeshPool, DemogenError> {
    let meshes: Vec<TriMesh> = box_meshes().into_iter().chain([tray_mesh()]).collect();
    let grasps: Vec<_> = meshes.par_iter().map(|m| precompute_grasps(m, config).ok()).collect();
    let mut pool = MeshPool::new();
    for (m, g) in meshes.into_iter().zip(grasps) {
        pool.insert(m, g);
    }
    for id in box_ids() {
        if pool.get(&id).is_some_and(|e| e.grasps.is_none()) {
            return Err(DemogenError::NoFeasibleGrasp);
        }
    }
    Ok(pool)
}

/// Task, and its track when it has one, by name.
pub fn task_by_name(name: &str) -> Option<(TaskSpec, Option<TrajectoryTrack>)> {
    match name {
        BOX_ON_TRAY => Some((box_on_tray_task(), None)),
        BOX_SHIFT => Some((box_shift_task(), Some(box_shift_track()))),
        _ => None,
    }
}

pub fn task_names() -> [&'static str; 2] {
    [BOX_ON_TRAY, BOX_SHIFT]
}
