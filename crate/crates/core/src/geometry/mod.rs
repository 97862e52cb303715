//! Poses, similarity transforms, triangle meshes, raycasting, pinhole cameras
//! and depth rendering.

mod bvh;
mod camera;
mod depth;
mod mesh;
mod obb;
mod pose;
pub mod primitives;
mod sampling;
mod similarity;

use std::path::PathBuf;

pub use bvh::{intersect_triangle, raycast_brute_force, Aabb, Bvh, Hit, MIN_HIT_DISTANCE};
pub use camera::{
    depth_to_points, lift_pixels, look_at, render_depth, InstancedScene, LiftedPoints,
    PinholeCamera, RayScene,
};
pub use depth::{DepthImage, DEPTH_MAGIC};
pub use mesh::{TriMesh, MIN_TRIANGLE_AREA};
pub use obb::OrientedBox;
pub use pose::{canonical_quaternion, rotation_between, Pose};
pub use sampling::{fibonacci_hemisphere, min_pairwise_angle};
pub use similarity::SimilarityTransform;

pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("OBJ parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed depth image: {0}")]
    MalformedDepth(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
