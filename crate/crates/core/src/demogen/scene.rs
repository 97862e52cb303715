use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DemogenError, TaskSpec};
use crate::geometry::{Aabb, Bvh, Pose, TriMesh, Vec3};
use crate::grasping::GraspSet;

/// Minimum x/y gap between object bounding boxes, meters.
pub const MIN_OBJECT_GAP: f64 = 0.02;
/// Rejection-sampling budget per scene.
pub const SCENE_SAMPLING_TRIES: usize = 1000;

/// Canonical metric meshes (resting on z = 0, centroid on the z axis) with
/// their precomputed grasps.
#[derive(Debug, Clone, Default)]
pub struct MeshPool {
    entries: BTreeMap<String, PoolEntry>,
}

#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub bvh: Arc<Bvh>,
    pub mesh: Arc<TriMesh>,
    pub grasps: Option<Arc<GraspSet>>,
}

impl MeshPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, mesh: TriMesh, grasps: Option<GraspSet>) {
        self.entries.insert(
            mesh.id.clone(),
            PoolEntry {
                mesh: Arc::new(mesh.clone()),
                bvh: Arc::new(Bvh::build(mesh)),
                grasps: grasps.map(Arc::new),
            },
        );
    }

    pub fn get(&self, id: &str) -> Option<&PoolEntry> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn require(&self, id: &str) -> Result<&PoolEntry, DemogenError> {
        self.get(id)
            .ok_or_else(|| DemogenError::InvalidTask(format!("mesh {id} is not in the pool")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Primary,
    Secondary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub mesh_id: String,
    pub role: Role,
    pub pose: Pose,
}

/// Objects on a table whose top surface is at `table_height`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub objects: Vec<SceneObject>,
    pub table_height: f64,
    pub seed: u64,
}

impl Scene {
    pub fn primary(&self) -> &SceneObject {
        self.objects.iter().find(|o| o.role == Role::Primary).expect("scene has a primary")
    }

    pub fn secondary(&self) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.role == Role::Secondary)
    }
}

/// World bounding box of `mesh` placed at `pose`.
pub fn placed_aabb(mesh: &TriMesh, pose: &Pose) -> Aabb {
    Aabb::from_points(mesh.vertices().iter().map(|v| pose.transform_point(v)).collect::<Vec<_>>().iter())
}

/// Horizontal gap between two boxes; negative when their footprints overlap.
pub fn xy_gap(a: &Aabb, b: &Aabb) -> f64 {
    let gx = (a.min.x - b.max.x).max(b.min.x - a.max.x);
    let gy = (a.min.y - b.max.y).max(b.min.y - a.max.y);
    gx.max(gy)
}

/// Uniform mesh per role, then uniform positions in the workspace and yaw
/// in `[0, 2π)`, resampled until all footprints are at least
/// [`MIN_OBJECT_GAP`] apart.
pub fn sample_scene(
    task: &TaskSpec,
    pool: &MeshPool,
    table_height: f64,
    seed: u64,
) -> Result<Scene, DemogenError> {
    let mut rng = crate::rng::stream(seed, super::SCENE_STREAM);
    let mut roles = vec![(Role::Primary, &task.primary_mesh_ids)];
    if task.has_secondary {
        roles.push((Role::Secondary, &task.secondary_mesh_ids));
    }
    let mut chosen = Vec::new();
    for (role, ids) in &roles {
        if ids.is_empty() {
            return Err(DemogenError::InvalidTask(format!("no meshes for role {role:?}")));
        }
        let id = &ids[rng.random_range(0..ids.len())];
        chosen.push((*role, id.clone(), pool.require(id)?.bvh.clone()));
    }
    let w = &task.workspace;
    for _ in 0..SCENE_SAMPLING_TRIES {
        let poses: Vec<Pose> = chosen
            .iter()
            .map(|_| {
                let x = rng.random_range(w.x[0]..w.x[1]);
                let y = rng.random_range(w.y[0]..w.y[1]);
                let yaw = rng.random_range(0.0..std::f64::consts::TAU);
                Pose::from_xyz_yaw(Vec3::new(x, y, table_height), yaw)
            })
            .collect();
        let boxes: Vec<Aabb> = chosen
            .iter()
            .zip(&poses)
            .map(|((_, _, bvh), p)| placed_aabb(bvh.mesh(), p))
            .collect();
        let separated = (0..boxes.len())
            .all(|i| (i + 1..boxes.len()).all(|j| xy_gap(&boxes[i], &boxes[j]) >= MIN_OBJECT_GAP));
        if separated {
            // meshes rest on z = 0 in their own frame; snap exactly onto the table
            let objects = chosen
                .iter()
                .zip(poses)
                .map(|((role, id, bvh), mut pose)| {
                    pose.position.z += table_height - placed_aabb(bvh.mesh(), &pose).min.z;
                    SceneObject {
                        mesh_id: id.clone(),
                        role: *role,
                        pose,
                    }
                })
                .collect();
            return Ok(Scene {
                objects,
                table_height,
                seed,
            });
        }
    }
    Err(DemogenError::SceneSamplingFailed(SCENE_SAMPLING_TRIES))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demogen::bundled;

    fn pool() -> MeshPool {
        let mut p = MeshPool::new();
        for m in bundled::box_meshes().into_iter().chain([bundled::tray_mesh()]) {
            p.insert(m, None);
        }
        p
    }

    #[test]
    fn single_object_rests_inside_workspace() {
        let mut task = bundled::box_on_tray_task();
        task.has_secondary = false;
        task.workspace = super::super::Workspace { x: [0.3, 0.7], y: [-0.3, 0.3] };
        let pool = pool();
        for seed in 0..50 {
            let s = sample_scene(&task, &pool, 0.0, seed).unwrap();
            let o = s.primary();
            assert!(task.workspace.contains_xy(o.pose.position.x, o.pose.position.y));
            let mesh = pool.get(&o.mesh_id).unwrap().bvh.mesh();
            assert!(placed_aabb(mesh, &o.pose).min.z.abs() < 1e-6);
        }
    }

    #[test]
    fn two_objects_keep_their_distance() {
        let task = bundled::box_on_tray_task();
        let pool = pool();
        for seed in 0..100 {
            let s = sample_scene(&task, &pool, 0.0, seed).unwrap();
            let b: Vec<Aabb> = s
                .objects
                .iter()
                .map(|o| placed_aabb(pool.get(&o.mesh_id).unwrap().bvh.mesh(), &o.pose))
                .collect();
            assert!(xy_gap(&b[0], &b[1]) >= MIN_OBJECT_GAP);
            assert_eq!(s, sample_scene(&task, &pool, 0.0, seed).unwrap());
        }
    }

    #[test]
    fn impossible_separation_fails() {
        let mut task = bundled::box_on_tray_task();
        task.workspace = super::super::Workspace { x: [0.5, 0.51], y: [0.0, 0.01] };
        let err = sample_scene(&task, &pool(), 0.0, 1).unwrap_err();
        assert!(matches!(err, DemogenError::SceneSamplingFailed(_)));
    }

    #[test]
    fn positions_are_uniform_by_chi_square() {
        let mut task = bundled::box_on_tray_task();
        task.has_secondary = false;
        let pool = pool();
        let w = task.workspace;
        let mut bins = [0usize; 25];
        let n = 1000;
        for seed in 0..n {
            let s = sample_scene(&task, &pool, 0.0, seed).unwrap();
            let p = s.primary().pose.position;
            let bx = (((p.x - w.x[0]) / (w.x[1] - w.x[0])) * 5.0).floor().clamp(0.0, 4.0) as usize;
            let by = (((p.y - w.y[0]) / (w.y[1] - w.y[0])) * 5.0).floor().clamp(0.0, 4.0) as usize;
            bins[5 * by + bx] += 1;
        }
        let expected = n as f64 / 25.0;
        let chi2: f64 = bins.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // upper 1% point of chi-square with 24 degrees of freedom
        assert!(chi2 < 42.980, "chi2 = {chi2}");
    }
}
