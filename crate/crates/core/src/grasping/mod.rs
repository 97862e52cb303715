//! Antipodal parallel-jaw grasps on metric meshes.

use std::path::{Path, PathBuf};

mod antipodal;
mod gripper;
mod store;
mod surface;

pub use antipodal::{antipodal_pairs, grasp_frame, Grasp};
pub use gripper::{grasp_collision_free, CollisionWorld, GripperBoxes, GripperModel, OPENING_CLEARANCE};
pub use store::{precompute_grasps, GraspConfig, GraspSet};
pub use surface::{outward_normals, sample_surface, SurfaceSample};

#[derive(Debug, thiserror::Error)]
pub enum GraspError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mesh {0} has no feasible grasps")]
    EmptyGraspSet(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GraspError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        GraspError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
