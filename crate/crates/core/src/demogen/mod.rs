//! Scene randomization, scripted expert, kinematic rollouts and evaluation.

use std::path::{Path, PathBuf};

pub mod bundled;
mod expert;
mod plan;
mod rollout;
mod scene;
mod success;
mod task;
mod world;

pub use expert::{Action, Controller, NoopController, ScriptedExpert};
pub use plan::{interpolate_path, plan_place, transfer_trajectory, PathParams, PlaceGeometry, APPROACH_OFFSET, PLACE_CLEARANCE};
pub use rollout::{
    evaluate_policy, generate_dataset, run_episode, EvalReport, EpisodeOutcome, FailureMode, GenerationConfig,
    GenerationStats, SeedResult,
};
pub use scene::{
    placed_aabb, sample_scene, xy_gap, MeshPool, PoolEntry, Role, Scene, SceneObject, MIN_OBJECT_GAP,
    SCENE_SAMPLING_TRIES,
};
pub use success::{evaluate_success, pose_errors};
pub use task::{RotationMetric, SuccessCriteria, TaskSpec, TrackFrame, TrajectoryTrack, Workspace};
pub use world::{CameraRig, Env, EnvConfig, Observation, StepResult, SuccessMode};

/// Seed-stream tags; every random draw of an episode comes from one of these.
pub const SCENE_STREAM: u64 = 1;
pub const GRASP_STREAM: u64 = 2;
pub const CLOUD_STREAM: u64 = 3;

#[derive(Debug, thiserror::Error)]
pub enum DemogenError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("path blocked in segment {segment}")]
    PathCollision { segment: usize },
    #[error("no collision-free scene after {0} tries")]
    SceneSamplingFailed(usize),
    #[error("no collision-free grasp")]
    NoFeasibleGrasp,
    #[error("the gripper closed on nothing")]
    GraspFailure,
    #[error("generation stalled: {successes} successes in {attempts} attempts")]
    GenerationStalled { attempts: usize, successes: usize },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Grasp(#[from] crate::grasping::GraspError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DemogenError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DemogenError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
