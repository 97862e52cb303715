use super::{RotationMetric, SuccessCriteria};
use crate::geometry::Pose;

/// Position and rotation error between two object poses: meters and degrees.
pub fn pose_errors(achieved: &Pose, expected: &Pose, metric: RotationMetric) -> (f64, f64) {
    let dp = (achieved.position - expected.position).norm();
    let rot = match metric {
        RotationMetric::UpAxis => {
            let c = achieved.axis(2).dot(&expected.axis(2)).clamp(-1.0, 1.0);
            c.acos()
        }
        RotationMetric::Geodesic => achieved.angle_to(expected),
    };
    (dp, rot.to_degrees())
}

/// Every present threshold must hold (inclusive).
pub fn evaluate_success(achieved: &Pose, expected: &Pose, criteria: &SuccessCriteria) -> bool {
    let (dp, dr) = pose_errors(achieved, expected, criteria.rotation_metric);
    criteria.position_threshold.is_none_or(|t| dp <= t) && criteria.rotation_threshold.is_none_or(|t| dr <= t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use nalgebra::UnitQuaternion;
    use proptest::prelude::*;

    fn tilted(deg: f64) -> Pose {
        Pose::from_rotation(UnitQuaternion::from_axis_angle(&Vec3::x_axis(), deg.to_radians()))
    }

    #[test]
    fn identical_poses_succeed() {
        let p = Pose::from_xyz_yaw(Vec3::new(0.5, 0.1, 0.0), 0.3);
        assert!(evaluate_success(&p, &p, &SuccessCriteria::position(0.15)));
    }

    #[test]
    fn position_boundary() {
        let e = Pose::identity();
        let c = SuccessCriteria::position(0.15);
        assert!(!evaluate_success(&Pose::from_translation(Vec3::new(0.16, 0.0, 0.0)), &e, &c));
        assert!(evaluate_success(&Pose::from_translation(Vec3::new(0.14, 0.0, 0.0)), &e, &c));
    }

    #[test]
    fn rotation_boundary() {
        let c = SuccessCriteria::rotation(10.0);
        assert!(!evaluate_success(&tilted(11.0), &Pose::identity(), &c));
        assert!(evaluate_success(&tilted(9.0), &Pose::identity(), &c));
        // far away but upright: no position threshold
        let far = Pose::from_translation(Vec3::new(5.0, 0.0, 0.0));
        assert!(evaluate_success(&far, &Pose::identity(), &c));
    }

    #[test]
    fn up_axis_ignores_yaw_but_geodesic_does_not() {
        let yawed = Pose::from_xyz_yaw(Vec3::zeros(), 1.0);
        let mut c = SuccessCriteria::rotation(10.0);
        assert!(evaluate_success(&yawed, &Pose::identity(), &c));
        c.rotation_metric = RotationMetric::Geodesic;
        assert!(!evaluate_success(&yawed, &Pose::identity(), &c));
    }

    proptest! {
        #[test]
        fn loosening_never_flips_success(
            dx in -0.3..0.3f64, ang in 0.0..40.0f64,
            pos in 0.01..0.3f64, rot in 1.0..30.0f64,
            dpos in 0.0..0.2f64, drot in 0.0..20.0f64,
        ) {
            let achieved = tilted(ang).compose(&Pose::from_translation(Vec3::new(dx, 0.0, 0.0)));
            let tight = SuccessCriteria { position_threshold: Some(pos), rotation_threshold: Some(rot), rotation_metric: RotationMetric::UpAxis };
            let loose = SuccessCriteria { position_threshold: Some(pos + dpos), rotation_threshold: Some(rot + drot), ..tight };
            let dropped = SuccessCriteria { position_threshold: None, ..tight };
            if evaluate_success(&achieved, &Pose::identity(), &tight) {
                prop_assert!(evaluate_success(&achieved, &Pose::identity(), &loose));
                prop_assert!(evaluate_success(&achieved, &Pose::identity(), &dropped));
            }
        }
    }
}
