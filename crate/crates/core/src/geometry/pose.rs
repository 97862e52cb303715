use nalgebra::{Quaternion, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::Vec3;

/// Rigid transform: rotation followed by translation.
///
/// Used for every world/object/gripper/camera pose. Orientation is stored as
/// a unit quaternion; on the wire it is always written `w, x, y, z` with the
/// double cover folded onto `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation: renormalize(orientation),
        }
    }

    pub fn identity() -> Self {
        Self {
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn from_translation(position: Vec3) -> Self {
        Self::new(position, UnitQuaternion::identity())
    }

    pub fn from_rotation(orientation: UnitQuaternion<f64>) -> Self {
        Self::new(Vec3::zeros(), orientation)
    }

    /// Rotation about the world z axis placed at `position`.
    pub fn from_xyz_yaw(position: Vec3, yaw: f64) -> Self {
        Self::new(position, UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw))
    }

    /// Builds a pose from orthonormal frame axes expressed in the parent frame.
    pub fn from_axes(origin: Vec3, x: Vec3, y: Vec3, z: Vec3) -> Self {
        let m = nalgebra::Matrix3::from_columns(&[x, y, z]);
        let rot = nalgebra::Rotation3::from_matrix_unchecked(m);
        Self::new(origin, UnitQuaternion::from_rotation_matrix(&rot))
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.position + self.orientation * other.position,
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose::new(-(inv * self.position), inv)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation * p + self.position
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.orientation * v
    }

    pub fn inverse_transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation.inverse() * (p - self.position)
    }

    /// Column axis `i` of the rotation matrix (0 = x, 1 = y, 2 = z).
    pub fn axis(&self, i: usize) -> Vec3 {
        let mut e = Vec3::zeros();
        e[i] = 1.0;
        self.orientation * e
    }

    /// Geodesic angle between the orientations, radians in `[0, π]`.
    pub fn angle_to(&self, other: &Pose) -> f64 {
        self.orientation.angle_to(&other.orientation)
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (self.position - other.position).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
    }

    pub fn to_isometry(&self) -> nalgebra::Isometry3<f64> {
        nalgebra::Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    /// `[x, y, z, w, qx, qy, qz]` with `w >= 0`.
    pub fn to_array(&self) -> [f64; 7] {
        let q = canonical_quaternion(&self.orientation);
        [
            self.position.x,
            self.position.y,
            self.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
        ]
    }

    /// Inverse of [`Pose::to_array`]. The quaternion is renormalized; a zero
    /// quaternion yields `None`.
    pub fn from_array(a: &[f64; 7]) -> Option<Pose> {
        let q = Quaternion::new(a[3], a[4], a[5], a[6]);
        let n = q.norm();
        if !(n.is_finite() && n > 1e-12) || !a[..3].iter().all(|v| v.is_finite()) {
            return None;
        }
        Some(Pose::new(
            Vec3::new(a[0], a[1], a[2]),
            UnitQuaternion::new_normalize(q),
        ))
    }

    pub fn to_array_f32(&self) -> [f32; 7] {
        self.to_array().map(|v| v as f32)
    }

    pub fn from_array_f32(a: &[f32; 7]) -> Option<Pose> {
        Pose::from_array(&a.map(f64::from))
    }

    /// Shortest-arc interpolation between two poses, `t` in `[0, 1]`.
    pub fn interpolate(&self, other: &Pose, t: f64) -> Pose {
        let position = self.position.lerp(&other.position, t);
        let mut target = other.orientation;
        if self.orientation.coords.dot(&target.coords) < 0.0 {
            target = UnitQuaternion::new_unchecked(-target.into_inner());
        }
        let orientation = self
            .orientation
            .try_slerp(&target, t, 1e-12)
            .unwrap_or(self.orientation);
        Pose::new(position, orientation)
    }
}

/// Folds the quaternion double cover onto `w >= 0`.
pub fn canonical_quaternion(q: &UnitQuaternion<f64>) -> Quaternion<f64> {
    let q = q.into_inner();
    if q.w < 0.0 {
        -q
    } else {
        q
    }
}

fn renormalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let n = q.into_inner().norm();
    if (n - 1.0).abs() > 1e-12 {
        UnitQuaternion::new_normalize(q.into_inner())
    } else {
        q
    }
}

/// Rotation taking `from` onto `to` along the shortest arc; both unit.
pub fn rotation_between(from: &Vec3, to: &Vec3) -> UnitQuaternion<f64> {
    UnitQuaternion::rotation_between(from, to).unwrap_or_else(|| {
        // antiparallel: rotate π about any axis orthogonal to `from`
        let helper = if from.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let axis = Unit::new_normalize(from.cross(&helper));
        UnitQuaternion::from_axis_angle(&axis, std::f64::consts::PI)
    })
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    position: [f64; 3],
    quaternion_wxyz: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let a = self.to_array();
        PoseRepr {
            position: [a[0], a[1], a[2]],
            quaternion_wxyz: [a[3], a[4], a[5], a[6]],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = PoseRepr::deserialize(deserializer)?;
        let [x, y, z] = r.position;
        let [w, qx, qy, qz] = r.quaternion_wxyz;
        Pose::from_array(&[x, y, z, w, qx, qy, qz])
            .ok_or_else(|| serde::de::Error::custom("pose must be finite with a non-zero quaternion"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (
            prop::array::uniform3(-2.0..2.0f64),
            prop::array::uniform4(-1.0..1.0f64),
        )
            .prop_filter_map("zero quaternion", |(p, q)| {
                Pose::from_array(&[p[0], p[1], p[2], q[0], q[1], q[2], q[3]])
                    .filter(|_| q.iter().map(|v| v * v).sum::<f64>() > 1e-3)
            })
    }

    proptest! {
        #[test]
        fn compose_with_inverse_is_identity(p in arb_pose()) {
            let id = p.compose(&p.inverse());
            prop_assert!(id.position.norm() < 1e-9);
            prop_assert!(id.orientation.angle() < 1e-9);
            prop_assert!((id.orientation.into_inner().norm() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn composition_is_associative(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
            let l = a.compose(&b).compose(&c);
            let r = a.compose(&b.compose(&c));
            prop_assert!(l.distance_to(&r) < 1e-9);
            prop_assert!(l.angle_to(&r) < 1e-9);
        }

        #[test]
        fn array_roundtrip_is_canonical(p in arb_pose()) {
            let a = p.to_array();
            prop_assert!(a[3] >= 0.0);
            let q = Pose::from_array(&a).unwrap();
            prop_assert!(q.distance_to(&p) < 1e-12);
            prop_assert!(q.angle_to(&p) < 1e-9);
        }
    }

    #[test]
    fn interpolate_takes_short_arc() {
        let a = Pose::identity();
        let q = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2);
        let b = Pose::from_rotation(UnitQuaternion::new_unchecked(-q.into_inner()));
        let mid = a.interpolate(&b, 0.5);
        assert!((mid.orientation.angle() - FRAC_PI_2 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn serde_uses_wxyz() {
        let p = Pose::new(
            Vec3::new(1.0, 2.0, 3.0),
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.3),
        );
        let json = serde_json::to_value(p).unwrap();
        let w = json["quaternion_wxyz"][0].as_f64().unwrap();
        assert!((w - (0.15f64).cos()).abs() < 1e-12);
        let back: Pose = serde_json::from_value(json).unwrap();
        assert!(back.angle_to(&p) < 1e-12);
    }
}
