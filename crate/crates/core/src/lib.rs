//! Turns one object-centric demonstration and a handful of candidate meshes
//! into many simulated robot demonstrations.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`alignment`]: render candidate meshes from hemisphere viewpoints, pick
//!    the view whose descriptors best match the demonstration reference, lift
//!    the matches to 3D and estimate a scale/rotation/translation with
//!    Umeyama inside RANSAC.
//! 2. [`grasping`]: sample the aligned mesh surface and keep antipodal contact
//!    pairs a parallel-jaw gripper can reach.
//! 3. [`demogen`]: randomize tabletop scenes, plan a scripted expert, roll it
//!    out in a kinematic world while rendering depth observations, and keep
//!    the successful episodes.
//! 4. [`dataset`]: store episodes in a self-describing little-endian archive.

pub mod alignment;
pub mod dataset;
pub mod demogen;
pub mod fixtures;
pub mod geometry;
pub mod grasping;
pub mod rng;

pub use geometry::{
    Bvh, DepthImage, PinholeCamera, Pose, SimilarityTransform, TriMesh, Vec3,
};
