use serde::{Deserialize, Serialize};

use super::{GripperModel, SurfaceSample};
use crate::geometry::{Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    pub contact_a: SurfaceSample,
    pub contact_b: SurfaceSample,
    pub width: f64,
    /// Gripper frame: x closes from `contact_a` toward `contact_b`, z is the
    /// approach direction, origin at the contact midpoint.
    pub pose: Pose,
    pub quality: f64,
}

fn angle(a: &Vec3, b: &Vec3) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos()
}

impl Grasp {
    /// Contact angles `(at a, at b)` between the closing line and the inward
    /// normals, radians.
    pub fn contact_angles(&self) -> (f64, f64) {
        let u = self.contact_b.point - self.contact_a.point;
        (angle(&u, &-self.contact_a.normal), angle(&-u, &-self.contact_b.normal))
    }

    /// Friction-cone and width inequalities.
    pub fn is_antipodal(&self, friction_coefficient: f64, max_width: f64) -> bool {
        let cone = friction_coefficient.atan();
        let (a, b) = self.contact_angles();
        a <= cone && b <= cone && self.width <= max_width
    }

    /// Same grasp expressed after moving the object by `pose`.
    pub fn transformed(&self, pose: &Pose) -> Grasp {
        let move_sample = |s: &SurfaceSample| SurfaceSample {
            point: pose.transform_point(&s.point),
            normal: pose.transform_vector(&s.normal),
            triangle_id: s.triangle_id,
        };
        Grasp {
            contact_a: move_sample(&self.contact_a),
            contact_b: move_sample(&self.contact_b),
            width: self.width,
            pose: pose.compose(&self.pose),
            quality: self.quality,
        }
    }
}

/// Right-handed gripper frame with x along `closing`, z the direction
/// orthogonal to it closest to world −z (toward −y when `closing` is
/// vertical), origin at `center`.
pub fn grasp_frame(center: &Vec3, closing: &Vec3) -> Pose {
    let x = closing.normalize();
    let project = |v: Vec3| v - x * x.dot(&v);
    let mut z = project(-Vec3::z());
    if z.norm() < 1e-6 {
        z = project(-Vec3::y());
    }
    let z = z.normalize();
    let y = z.cross(&x);
    Pose::from_axes(*center, x, y, z)
}

/// All unordered sample pairs inside each other's friction cone whose width
/// fits the gripper. Pairs are visited as `(i, j)` with `i < j`, `contact_a`
/// being sample `i`.
pub fn antipodal_pairs(
    samples: &[SurfaceSample],
    friction_coefficient: f64,
    gripper: &GripperModel,
) -> Vec<Grasp> {
    let cone = friction_coefficient.atan();
    let cos_cone = cone.cos();
    let mut out = Vec::new();
    for i in 0..samples.len() {
        let a = &samples[i];
        for b in &samples[i + 1..] {
            let d = b.point - a.point;
            let width = d.norm();
            if width <= 1e-9 || width > gripper.max_width {
                continue;
            }
            let u = d / width;
            // cheap rejection before the exact angle test
            if u.dot(&-a.normal) < cos_cone - 1e-9 || (-u).dot(&-b.normal) < cos_cone - 1e-9 {
                continue;
            }
            let ang_a = angle(&u, &-a.normal);
            let ang_b = angle(&-u, &-b.normal);
            if ang_a > cone || ang_b > cone {
                continue;
            }
            out.push(Grasp {
                contact_a: *a,
                contact_b: *b,
                width,
                pose: grasp_frame(&((a.point + b.point) / 2.0), &u),
                quality: 1.0 - ang_a.max(ang_b) / cone,
            });
        }
    }
    out
}
