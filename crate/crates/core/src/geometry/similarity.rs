use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose, Vec3};

/// 7-DoF transform `x ↦ s·R·x + t` mapping canonical mesh space to metric
/// demonstration space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    scale: f64,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl SimilarityTransform {
    pub fn new(
        scale: f64,
        rotation: UnitQuaternion<f64>,
        translation: Vec3,
    ) -> Result<Self, GeometryError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GeometryError::InvalidArgument(format!(
                "similarity scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self {
            scale,
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.scale * (self.rotation * p) + self.translation
    }

    pub fn apply_all(&self, points: &[Vec3]) -> Vec<Vec3> {
        points.iter().map(|p| self.apply(p)).collect()
    }

    pub fn inverse(&self) -> Self {
        let rinv = self.rotation.inverse();
        Self {
            scale: 1.0 / self.scale,
            rotation: rinv,
            translation: -(rinv * self.translation) / self.scale,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            scale: self.scale * other.scale,
            rotation: self.rotation * other.rotation,
            translation: self.apply(&other.translation),
        }
    }

    /// Rigid part (rotation and translation), dropping the scale.
    pub fn rigid_part(&self) -> Pose {
        Pose::new(self.translation, self.rotation)
    }
}

#[derive(Serialize, Deserialize)]
struct SimilarityRepr {
    scale: f64,
    quaternion_wxyz: [f64; 4],
    translation: [f64; 3],
}

impl Serialize for SimilarityTransform {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let q = super::pose::canonical_quaternion(&self.rotation);
        SimilarityRepr {
            scale: self.scale,
            quaternion_wxyz: [q.w, q.i, q.j, q.k],
            translation: self.translation.into(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SimilarityTransform {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = SimilarityRepr::deserialize(deserializer)?;
        let [w, x, y, z] = r.quaternion_wxyz;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        if !(q.norm() > 1e-12) {
            return Err(serde::de::Error::custom("zero quaternion"));
        }
        SimilarityTransform::new(
            r.scale,
            UnitQuaternion::new_normalize(q),
            Vec3::from(r.translation),
        )
        .map_err(serde::de::Error::custom)
    }
}
