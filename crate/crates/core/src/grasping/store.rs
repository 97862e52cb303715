use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    antipodal_pairs, grasp_collision_free, sample_surface, CollisionWorld, Grasp, GraspError,
    GripperModel, SurfaceSample,
};
use crate::geometry::{Pose, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraspConfig {
    pub samples: usize,
    pub friction_coefficient: f64,
    pub top_n: usize,
    pub seed: u64,
    pub gripper: GripperModel,
}

impl Default for GraspConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            friction_coefficient: 0.5,
            top_n: 256,
            seed: 0,
            gripper: GripperModel::default(),
        }
    }
}

/// Stored grasps for one mesh, in mesh coordinates, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspSet {
    pub mesh_id: String,
    pub gripper: GripperModel,
    pub friction_coefficient: f64,
    pub grasps: Vec<Grasp>,
}

/// Samples the surface, keeps antipodal pairs that do not put the gripper
/// through the mesh itself and retains the `top_n` by quality (stable, so
/// equal qualities keep sampling order).
pub fn precompute_grasps(mesh: &TriMesh, config: &GraspConfig) -> Result<GraspSet, GraspError> {
    config.gripper.validate()?;
    if !(config.friction_coefficient.is_finite() && config.friction_coefficient > 0.0) {
        return Err(GraspError::InvalidArgument("friction coefficient must be positive".into()));
    }
    let samples = sample_surface(mesh, config.samples, config.seed)?;
    let mut candidates = antipodal_pairs(&samples, config.friction_coefficient, &config.gripper);
    candidates.sort_by(|a, b| b.quality.total_cmp(&a.quality));
    let world = CollisionWorld {
        meshes: vec![(Arc::new(mesh.clone()), Pose::identity())],
        floor_z: None,
        grasped: Some(0),
    };
    let grasps: Vec<Grasp> = candidates
        .into_iter()
        .filter(|g| grasp_collision_free(g, &world, &config.gripper))
        .take(config.top_n)
        .collect();
    if grasps.is_empty() {
        return Err(GraspError::EmptyGraspSet(mesh.id.clone()));
    }
    log::debug!("{}: kept {} grasps", mesh.id, grasps.len());
    Ok(GraspSet {
        mesh_id: mesh.id.clone(),
        gripper: config.gripper,
        friction_coefficient: config.friction_coefficient,
        grasps,
    })
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    pos: [f64; 3],
    quat_wxyz: [f64; 4],
}

#[derive(Serialize, Deserialize)]
struct GraspRecord {
    contact_a: SurfaceSample,
    contact_b: SurfaceSample,
    width: f64,
    pose: PoseRecord,
    quality: f64,
}

#[derive(Serialize, Deserialize)]
struct GraspFile {
    mesh_id: String,
    gripper: GripperModel,
    friction_coefficient: f64,
    grasps: Vec<GraspRecord>,
}

impl GraspSet {
    pub fn to_json(&self) -> String {
        let file = GraspFile {
            mesh_id: self.mesh_id.clone(),
            gripper: self.gripper,
            friction_coefficient: self.friction_coefficient,
            grasps: self
                .grasps
                .iter()
                .map(|g| {
                    let a = g.pose.to_array();
                    GraspRecord {
                        contact_a: g.contact_a,
                        contact_b: g.contact_b,
                        width: g.width,
                        pose: PoseRecord {
                            pos: [a[0], a[1], a[2]],
                            quat_wxyz: [a[3], a[4], a[5], a[6]],
                        },
                        quality: g.quality,
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("grasp set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraspError> {
        let file: GraspFile = serde_json::from_str(text).map_err(|e| GraspError::Format(e.to_string()))?;
        let grasps = file
            .grasps
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let [x, y, z] = r.pose.pos;
                let [w, qx, qy, qz] = r.pose.quat_wxyz;
                let pose = Pose::from_array(&[x, y, z, w, qx, qy, qz])
                    .ok_or_else(|| GraspError::Format(format!("grasp {i} has an invalid pose")))?;
                Ok(Grasp {
                    contact_a: r.contact_a,
                    contact_b: r.contact_b,
                    width: r.width,
                    pose,
                    quality: r.quality,
                })
            })
            .collect::<Result<Vec<_>, GraspError>>()?;
        Ok(Self {
            mesh_id: file.mesh_id,
            gripper: file.gripper,
            friction_coefficient: file.friction_coefficient,
            grasps,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), GraspError> {
        std::fs::write(path, self.to_json()).map_err(|e| GraspError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, GraspError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraspError::io(path, e))?;
        Self::from_json(&text).map_err(|e| GraspError::Format(format!("{}: {e}", path.display())))
    }
}
