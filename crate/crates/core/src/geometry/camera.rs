use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Bvh, DepthImage, GeometryError, Hit, Pose, Vec3};

/// Pinhole camera. `pose` maps camera coordinates to world coordinates; the
/// camera looks along +z with x to the right and y down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub pose: Pose,
}

impl PinholeCamera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        pose: Pose,
    ) -> Result<Self, GeometryError> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            pose,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Square pixels with the principal point at the image center.
    pub fn from_vertical_fov(
        width: u32,
        height: u32,
        vfov_deg: f64,
        pose: Pose,
    ) -> Result<Self, GeometryError> {
        let f = height as f64 / 2.0 / (vfov_deg.to_radians() / 2.0).tan();
        Self::new(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height, pose)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let ok = self.fx.is_finite()
            && self.fy.is_finite()
            && self.fx > 0.0
            && self.fy > 0.0
            && self.cx.is_finite()
            && self.cy.is_finite()
            && self.width > 0
            && self.height > 0
            && self.pose.is_finite();
        if ok {
            Ok(())
        } else {
            Err(GeometryError::InvalidArgument(format!(
                "camera intrinsics must be positive and finite: {self:?}"
            )))
        }
    }

    pub fn with_pose(mut self, pose: Pose) -> Self {
        self.pose = pose;
        self
    }

    /// Unit viewing direction (+z of the camera) in world coordinates.
    pub fn forward(&self) -> Vec3 {
        self.pose.axis(2)
    }

    /// World point to `(u, v, z_cam)`; `None` behind the camera.
    pub fn project(&self, p_world: &Vec3) -> Option<(f64, f64, f64)> {
        let p = self.pose.inverse_transform_point(p_world);
        if p.z <= 0.0 {
            return None;
        }
        Some((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
            p.z,
        ))
    }

    /// Back-projects a pixel coordinate with camera-frame depth `z`.
    pub fn lift(&self, u: f64, v: f64, z: f64) -> Vec3 {
        let p = Vec3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z);
        self.pose.transform_point(&p)
    }

    /// Unnormalized camera-frame ray through pixel coordinate `(u, v)`, z = 1.
    fn camera_ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// World ray through the center of pixel `(i, j)` and the camera-z per unit
    /// distance along it.
    pub fn pixel_ray(&self, i: u32, j: u32) -> (Vec3, Vec3, f64) {
        let d = self.camera_ray(i as f64 + 0.5, j as f64 + 0.5);
        let n = d.norm();
        (
            self.pose.position,
            self.pose.transform_vector(&(d / n)),
            1.0 / n,
        )
    }
}

/// Places a camera at `eye` looking at `target`. `up` orients the image so
/// that it points toward the top rows.
pub fn look_at(eye: &Vec3, target: &Vec3, up: &Vec3) -> Pose {
    let z = (target - eye).normalize();
    let mut down = -(up - z * up.dot(&z));
    if down.norm() < 1e-9 {
        let alt = if z.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        down = -(alt - z * alt.dot(&z));
    }
    let y = down.normalize();
    let x = y.cross(&z);
    Pose::from_axes(*eye, x, y, z)
}

/// Anything rays can be cast against.
pub trait RayScene {
    /// Nearest hit along a unit direction.
    fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit>;
}

impl RayScene for Bvh {
    fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        self.raycast(origin, dir)
    }
}

impl<T: RayScene + ?Sized> RayScene for Arc<T> {
    fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        (**self).cast(origin, dir)
    }
}

/// Several posed BVH instances. Rays are moved into each instance's frame so
/// the acceleration structures never need rebuilding when objects move.
/// Returned triangle ids are offset by the triangle counts of the preceding
/// instances.
#[derive(Debug, Clone, Default)]
pub struct InstancedScene {
    pub instances: Vec<(Arc<Bvh>, Pose)>,
}

impl InstancedScene {
    pub fn new(instances: Vec<(Arc<Bvh>, Pose)>) -> Self {
        Self { instances }
    }
}

impl RayScene for InstancedScene {
    fn cast(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut offset = 0;
        for (bvh, pose) in &self.instances {
            let o = pose.inverse_transform_point(origin);
            let d = pose.orientation.inverse() * dir;
            let limit = best.as_ref().map_or(f64::INFINITY, |h| h.distance);
            if let Some(h) = bvh.raycast_within(&o, &d, limit) {
                if best.as_ref().is_none_or(|b| h.distance < b.distance) {
                    best = Some(Hit {
                        triangle_id: h.triangle_id + offset,
                        distance: h.distance,
                        point: origin + dir * h.distance,
                        normal: pose.transform_vector(&h.normal),
                    });
                }
            }
            offset += bvh.mesh().triangles().len();
        }
        best
    }
}

/// Renders camera-z depth through every pixel center; misses are NaN.
pub fn render_depth(scene: &impl RayScene, camera: &PinholeCamera) -> DepthImage {
    let mut depth = DepthImage::empty(camera.width, camera.height);
    for j in 0..camera.height {
        for i in 0..camera.width {
            let (o, d, z_per_t) = camera.pixel_ray(i, j);
            if let Some(hit) = scene.cast(&o, &d) {
                depth.set(i, j, (hit.distance * z_per_t) as f32);
            }
        }
    }
    depth
}

/// Result of [`lift_pixels`]: world points for the liftable inputs and the
/// input index each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LiftedPoints {
    pub points: Vec<Vec3>,
    pub indices: Vec<usize>,
}

/// Back-projects pixel coordinates using the depth at the containing pixel.
/// Pixels outside the image or without finite depth are skipped.
pub fn lift_pixels(camera: &PinholeCamera, depth: &DepthImage, pixels: &[(f64, f64)]) -> LiftedPoints {
    let mut out = LiftedPoints::default();
    for (k, &(u, v)) in pixels.iter().enumerate() {
        if let Some(z) = depth.sample(u, v) {
            out.points.push(camera.lift(u, v, z as f64));
            out.indices.push(k);
        }
    }
    out
}

/// Every finite pixel of a depth image as a world point.
pub fn depth_to_points(camera: &PinholeCamera, depth: &DepthImage) -> Vec<Vec3> {
    let mut pts = Vec::new();
    for j in 0..depth.height() {
        for i in 0..depth.width() {
            if let Some(z) = depth.get(i, j) {
                pts.push(camera.lift(i as f64 + 0.5, j as f64 + 0.5, z as f64));
            }
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use nalgebra::UnitQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam(pose: Pose) -> PinholeCamera {
        PinholeCamera::new(50.0, 52.0, 32.0, 24.0, 64, 48, pose).unwrap()
    }

    #[test]
    fn principal_point_lifts_onto_axis() {
        let c = cam(Pose::identity());
        let mut d = DepthImage::empty(64, 48);
        d.set(32, 24, 1.5);
        let l = lift_pixels(&c, &d, &[(32.0, 24.0)]);
        assert_eq!(l.indices, vec![0]);
        assert!((l.points[0] - Vec3::new(0.0, 0.0, 1.5)).norm() < 1e-12);
    }

    #[test]
    fn project_lift_roundtrip() {
        let pose = Pose::new(
            Vec3::new(0.2, -0.1, 0.3),
            UnitQuaternion::from_euler_angles(0.2, -0.3, 0.5),
        );
        let c = cam(pose);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut max_err: f64 = 0.0;
        let mut n = 0;
        while n < 50 {
            let local = Vec3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.4..0.4),
                rng.random_range(0.5..3.0),
            );
            let p = pose.transform_point(&local);
            let (u, v, z) = c.project(&p).unwrap();
            if !(0.0..64.0).contains(&u) || !(0.0..48.0).contains(&v) {
                continue;
            }
            let mut d = DepthImage::empty(64, 48);
            d.set(u as u32, v as u32, z as f32);
            // depth is stored as f32; lift with the exact depth to isolate geometry
            let q = c.lift(u, v, z);
            max_err = max_err.max((q - p).norm());
            let l = lift_pixels(&c, &d, &[(u, v)]);
            assert!((l.points[0] - p).norm() < 1e-6);
            n += 1;
        }
        assert!(max_err < 1e-6, "{max_err}");
    }

    #[test]
    fn camera_translation_shifts_lifted_points() {
        let mut d = DepthImage::empty(64, 48);
        d.set(10, 5, 2.0);
        d.set(40, 30, 0.7);
        let px = [(10.5, 5.5), (40.2, 30.9), (0.5, 0.5)];
        let a = lift_pixels(&cam(Pose::identity()), &d, &px);
        let b = lift_pixels(
            &cam(Pose::from_translation(Vec3::new(1.0, 0.0, 0.0))),
            &d,
            &px,
        );
        assert_eq!(a.indices, vec![0, 1]);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((q - p - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn empty_scene_renders_nothing() {
        let scene = InstancedScene::default();
        let d = render_depth(&scene, &cam(Pose::identity()));
        assert!(d.data().iter().all(|v| !v.is_finite()));
    }

    #[test]
    fn planar_quad_renders_constant_depth() {
        // unit square facing the camera at z = 2 in camera frame
        let q = primitives::quad("q", 0.5, 0.5).map_vertices(|v| v + Vec3::new(0.0, 0.0, 2.0));
        let bvh = Bvh::build(q);
        let d = render_depth(&bvh, &cam(Pose::identity()));
        let covered: Vec<f32> = d.data().iter().copied().filter(|v| v.is_finite()).collect();
        assert!(covered.len() > 100);
        assert!(covered.iter().all(|&z| (z as f64 - 2.0).abs() < 1e-6));
    }

    #[test]
    fn sphere_center_pixel_depth() {
        let bvh = Bvh::build(primitives::icosphere("s", 0.1, 4));
        let eye = Vec3::new(0.0, 0.0, -1.0);
        let pose = look_at(&eye, &Vec3::zeros(), &Vec3::y());
        let c = PinholeCamera::new(50.0, 50.0, 32.0, 32.0, 64, 64, pose).unwrap();
        let d = render_depth(&bvh, &c);
        let center = d.sample(32.0, 32.0).unwrap() as f64;
        assert!((center - 0.9).abs() < 2e-3, "{center}");
    }

    #[test]
    fn look_at_points_forward_with_y_down() {
        let p = look_at(&Vec3::new(-1.0, 0.0, 0.0), &Vec3::zeros(), &Vec3::z());
        assert!((p.axis(2) - Vec3::x()).norm() < 1e-12);
        assert!((p.axis(1) + Vec3::z()).norm() < 1e-12);
        assert!((p.axis(0) + Vec3::y()).norm() < 1e-12);
        // straight down falls back to a valid frame
        let p = look_at(&Vec3::new(0.0, 0.0, 1.0), &Vec3::zeros(), &Vec3::z());
        assert!((p.axis(2) + Vec3::z()).norm() < 1e-12);
    }
}
