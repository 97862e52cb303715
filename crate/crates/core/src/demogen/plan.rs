use serde::{Deserialize, Serialize};

use super::DemogenError;
use crate::geometry::{Pose, Vec3};

/// Vertical offset of the pre-grasp pose above the grasp, meters.
pub const APPROACH_OFFSET: f64 = 0.10;
/// Gap between the carried object and the secondary's top before release.
pub const PLACE_CLEARANCE: f64 = 0.005;

/// End-effector waypoints that carry the object along the track:
/// `waypoint_t = relative_t ∘ grasp_world` with world-frame relative poses.
pub fn transfer_trajectory(relative_world: &[Pose], grasp_world: &Pose) -> Vec<Pose> {
    relative_world.iter().map(|r| r.compose(grasp_world)).collect()
}

/// Inputs of the place template.
#[derive(Debug, Clone, Copy)]
pub struct PlaceGeometry {
    pub primary_pose: Pose,
    /// Lowest point of the primary mesh in its own frame (z).
    pub primary_min_z: f64,
    /// Secondary centroid in world coordinates.
    pub secondary_center: Vec3,
    /// Highest point of the secondary in world coordinates (z).
    pub secondary_top: f64,
    pub table_height: f64,
    pub bottleneck_height: f64,
}

/// Pre-grasp → grasp → lift to the bottleneck → over the secondary → lower
/// until the object clears the secondary's top by [`PLACE_CLEARANCE`]. The
/// grasp orientation is kept throughout; the last pose is the release pose.
/// The object's centroid, not the gripper, is brought over the secondary.
pub fn plan_place(geometry: &PlaceGeometry, grasp_world: &Pose) -> Vec<Pose> {
    let g = grasp_world;
    let at = |p: Vec3| Pose::new(p, g.orientation);
    let offset = g.position - geometry.primary_pose.position;
    let bottleneck_z = geometry.table_height + geometry.bottleneck_height;
    // object bottom hangs this far below the gripper origin
    let hang = g.position.z - (geometry.primary_pose.position.z + geometry.primary_min_z);
    let over = Vec3::new(
        geometry.secondary_center.x + offset.x,
        geometry.secondary_center.y + offset.y,
        bottleneck_z,
    );
    vec![
        at(g.position + Vec3::new(0.0, 0.0, APPROACH_OFFSET)),
        *g,
        at(Vec3::new(g.position.x, g.position.y, bottleneck_z)),
        at(over),
        at(Vec3::new(over.x, over.y, geometry.secondary_top + PLACE_CLEARANCE + hang)),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathParams {
    /// Maximum motion per increment, meters.
    pub step: f64,
    /// A rotation of θ radians counts as θ·radius meters of motion.
    pub rotation_radius: f64,
}

impl Default for PathParams {
    fn default() -> Self {
        Self {
            step: 0.025,
            rotation_radius: 0.1,
        }
    }
}

/// Straight-line, shortest-arc interpolation through `waypoints`. Every pose
/// is passed to `free(segment, pose)`; a rejected pose aborts with
/// [`DemogenError::PathCollision`] naming the segment.
pub fn interpolate_path(
    waypoints: &[Pose],
    params: &PathParams,
    mut free: impl FnMut(usize, &Pose) -> bool,
) -> Result<Vec<Pose>, DemogenError> {
    if waypoints.len() < 2 {
        return Err(DemogenError::InvalidArgument("a path needs at least two waypoints".into()));
    }
    if !(params.step.is_finite() && params.step > 0.0 && params.rotation_radius >= 0.0) {
        return Err(DemogenError::InvalidArgument("path step must be positive".into()));
    }
    let mut out = vec![waypoints[0]];
    if !free(0, &waypoints[0]) {
        return Err(DemogenError::PathCollision { segment: 0 });
    }
    for (seg, w) in waypoints.windows(2).enumerate() {
        let length = w[0].distance_to(&w[1]).max(w[0].angle_to(&w[1]) * params.rotation_radius);
        let n = ((length / params.step) - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            let p = w[0].interpolate(&w[1], k as f64 / n as f64);
            if !free(seg, &p) {
                return Err(DemogenError::PathCollision { segment: seg });
            }
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::UnitQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
        Pose::new(
            Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..1.0)),
            UnitQuaternion::from_euler_angles(
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(-3.0..3.0),
            ),
        )
    }

    #[test]
    fn identity_track_stays_at_grasp() {
        let g = Pose::from_xyz_yaw(Vec3::new(0.5, 0.0, 0.1), 0.7);
        for w in transfer_trajectory(&[Pose::identity(); 5], &g) {
            assert!(w.distance_to(&g) < 1e-15 && w.angle_to(&g) < 1e-12);
        }
    }

    #[test]
    fn raise_track_raises_grasp() {
        let g = Pose::from_xyz_yaw(Vec3::new(0.5, 0.0, 0.1), 0.7);
        let up = Pose::from_translation(Vec3::new(0.0, 0.0, 0.1));
        let w = transfer_trajectory(&[Pose::identity(), up], &g);
        assert!((w[1].position - (g.position + Vec3::new(0.0, 0.0, 0.1))).norm() < 1e-12);
        assert!(w[1].angle_to(&g) < 1e-12);
    }

    #[test]
    fn consecutive_motion_matches_track() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut track = vec![Pose::identity()];
        for _ in 0..10 {
            track.push(random_pose(&mut rng));
        }
        let g = random_pose(&mut rng);
        let w = transfer_trajectory(&track, &g);
        for t in 0..track.len() - 1 {
            let a = w[t + 1].compose(&w[t].inverse());
            let b = track[t + 1].compose(&track[t].inverse());
            assert!(a.distance_to(&b) < 1e-9 && a.angle_to(&b) < 1e-9);
        }
    }

    fn place_geometry(secondary: Vec3) -> PlaceGeometry {
        PlaceGeometry {
            primary_pose: Pose::from_translation(Vec3::new(0.5, 0.2, 0.0)),
            primary_min_z: 0.0,
            secondary_center: secondary,
            secondary_top: 0.04,
            table_height: 0.0,
            bottleneck_height: 0.15,
        }
    }

    #[test]
    fn place_template_passes_the_bottleneck() {
        let grasp = Pose::new(Vec3::new(0.5, 0.2, 0.02), UnitQuaternion::from_axis_angle(&Vec3::x_axis(), std::f64::consts::PI));
        let plan = plan_place(&place_geometry(Vec3::zeros()), &grasp);
        assert_eq!(plan.len(), 5);
        assert!((plan[0].position - Vec3::new(0.5, 0.2, 0.12)).norm() < 1e-12);
        assert!((plan[3].position - Vec3::new(0.0, 0.0, 0.15)).norm() < 1e-9);
        // lowest object point ends 5 mm above the secondary's top
        assert!((plan[4].position.z - (0.04 + 0.005 + 0.02)).abs() < 1e-12);
        assert!(plan.iter().all(|p| p.angle_to(&grasp) < 1e-12));
    }

    #[test]
    fn place_template_never_shortcuts() {
        let grasp = Pose::from_translation(Vec3::new(0.5, 0.2, 0.02));
        let plan = plan_place(&place_geometry(Vec3::new(0.5, 0.2, 0.0)), &grasp);
        assert_eq!(plan.len(), 5);
        assert!((plan[2].position.z - 0.15).abs() < 1e-12);
        assert!((plan[3].position.z - 0.15).abs() < 1e-12);
    }

    #[test]
    fn ten_centimeters_at_one_centimeter_steps() {
        let a = Pose::identity();
        let b = Pose::from_translation(Vec3::new(0.1, 0.0, 0.0));
        let p = interpolate_path(&[a, b], &PathParams { step: 0.01, rotation_radius: 0.1 }, |_, _| true).unwrap();
        assert_eq!(p.len(), 11);
        for w in p.windows(2) {
            assert!((w[0].distance_to(&w[1]) - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_turn_in_nine_degree_steps() {
        let a = Pose::identity();
        let b = Pose::from_rotation(UnitQuaternion::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_2));
        let r = 0.1;
        let params = PathParams { step: 9f64.to_radians() * r, rotation_radius: r };
        let p = interpolate_path(&[a, b], &params, |_, _| true).unwrap();
        assert_eq!(p.len(), 11);
        let first = p[0].angle_to(&p[1]);
        for w in p.windows(2) {
            assert!((w[0].angle_to(&w[1]) - first).abs() < 1e-9);
        }
    }

    #[test]
    fn blocked_segment_is_reported() {
        let pts = [0.0, 0.1, 0.2].map(|x| Pose::from_translation(Vec3::new(x, 0.0, 0.0)));
        // a wall at x = 0.15
        let err = interpolate_path(&pts, &PathParams::default(), |_, p| (p.position.x - 0.15).abs() > 0.005).unwrap_err();
        assert!(matches!(err, DemogenError::PathCollision { segment: 1 }));
    }
}
