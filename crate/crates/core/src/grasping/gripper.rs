use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Grasp, GraspError};
use crate::geometry::{Aabb, OrientedBox, Pose, TriMesh, Vec3};

/// Extra opening beyond the grasp width while approaching, meters.
pub const OPENING_CLEARANCE: f64 = 0.005;

/// Parallel-jaw gripper made of two finger boxes and a palm box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GripperModel {
    pub max_width: f64,
    pub finger_length: f64,
    pub finger_thickness: f64,
    pub palm_depth: f64,
}

impl Default for GripperModel {
    fn default() -> Self {
        Self {
            max_width: 0.08,
            finger_length: 0.05,
            finger_thickness: 0.01,
            palm_depth: 0.02,
        }
    }
}

/// The fingertips reach this far past the grasp center along the approach.
const FINGERTIP_DEPTH: f64 = 0.01;

/// Gripper boxes in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperBoxes {
    pub fingers: [OrientedBox; 2],
    pub palm: OrientedBox,
    /// Free space swept by the closing fingers.
    pub corridor: OrientedBox,
}

impl GripperBoxes {
    pub fn solid(&self) -> [OrientedBox; 3] {
        [self.fingers[0], self.fingers[1], self.palm]
    }
}

impl GripperModel {
    pub fn validate(&self) -> Result<(), GraspError> {
        let all = [self.max_width, self.finger_length, self.finger_thickness, self.palm_depth];
        if !all.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(GraspError::InvalidArgument("gripper dimensions must be positive".into()));
        }
        if self.max_width <= 2.0 * self.finger_thickness {
            return Err(GraspError::InvalidArgument(
                "gripper max_width must exceed twice the finger thickness".into(),
            ));
        }
        Ok(())
    }

    /// Boxes for a gripper at `pose` (x closing, z approach) with the finger
    /// inner faces `opening` apart.
    pub fn boxes(&self, pose: &Pose, opening: f64) -> GripperBoxes {
        let t = self.finger_thickness;
        let l = self.finger_length;
        let half_open = opening / 2.0;
        let finger_z = FINGERTIP_DEPTH - l / 2.0;
        let place = |c: Vec3, half: Vec3| OrientedBox::new(pose.compose(&Pose::from_translation(c)), half);
        GripperBoxes {
            fingers: [
                place(Vec3::new(-(half_open + t / 2.0), 0.0, finger_z), Vec3::new(t / 2.0, t, l / 2.0)),
                place(Vec3::new(half_open + t / 2.0, 0.0, finger_z), Vec3::new(t / 2.0, t, l / 2.0)),
            ],
            palm: place(
                Vec3::new(0.0, 0.0, FINGERTIP_DEPTH - l - self.palm_depth / 2.0),
                Vec3::new(half_open + t, t, self.palm_depth / 2.0),
            ),
            corridor: place(Vec3::new(0.0, 0.0, finger_z), Vec3::new(half_open, t, l / 2.0)),
        }
    }
}

/// Static obstacles for gripper collision queries.
#[derive(Debug, Clone, Default)]
pub struct CollisionWorld {
    pub meshes: Vec<(Arc<TriMesh>, Pose)>,
    /// Anything below this height is inside the table.
    pub floor_z: Option<f64>,
    /// Index into `meshes` of the object being grasped; its triangles that
    /// lie entirely inside the closing corridor are ignored.
    pub grasped: Option<usize>,
}

impl CollisionWorld {
    /// True when any solid gripper box touches an obstacle.
    pub fn collides(&self, boxes: &GripperBoxes) -> bool {
        let solid = boxes.solid();
        if let Some(floor) = self.floor_z {
            if solid.iter().flat_map(|b| b.corners()).any(|c| c.z < floor) {
                return true;
            }
        }
        for (k, (mesh, pose)) in self.meshes.iter().enumerate() {
            let inv = pose.inverse();
            let local = |b: &OrientedBox| OrientedBox::new(inv.compose(&b.pose), b.half);
            let corridor = local(&boxes.corridor);
            let exempt = self.grasped == Some(k);
            for b in solid.iter().map(local) {
                let bb = Aabb::from_points(b.corners().iter());
                for i in 0..mesh.triangles().len() {
                    let tri = mesh.triangle(i);
                    let tb = Aabb::from_points(tri.iter());
                    if (0..3).any(|a| tb.min[a] > bb.max[a] || tb.max[a] < bb.min[a]) {
                        continue;
                    }
                    if exempt && tri.iter().all(|p| corridor.contains(p)) {
                        continue;
                    }
                    if b.intersects_triangle(&tri) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Collision check for a gripper at the grasp pose, fingers opened to the
/// grasp width plus [`OPENING_CLEARANCE`].
pub fn grasp_collision_free(grasp: &Grasp, world: &CollisionWorld, gripper: &GripperModel) -> bool {
    grasp.pose.is_finite() && !world.collides(&gripper.boxes(&grasp.pose, grasp.width + OPENING_CLEARANCE))
}
