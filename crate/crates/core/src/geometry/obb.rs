use super::{Pose, Vec3};

/// Oriented box: `pose` places the box center and axes, `half` holds the
/// half extents along the local axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub pose: Pose,
    pub half: Vec3,
}

impl OrientedBox {
    pub fn new(pose: Pose, half: Vec3) -> Self {
        Self { pose, half }
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::zeros(); 8];
        for (k, c) in out.iter_mut().enumerate() {
            let s = Vec3::new(
                if k & 1 == 0 { -1.0 } else { 1.0 },
                if k & 2 == 0 { -1.0 } else { 1.0 },
                if k & 4 == 0 { -1.0 } else { 1.0 },
            );
            *c = self.pose.transform_point(&self.half.component_mul(&s));
        }
        out
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let l = self.pose.inverse_transform_point(p);
        (0..3).all(|i| l[i].abs() <= self.half[i])
    }

    /// Separating-axis test against a world-space triangle.
    pub fn intersects_triangle(&self, tri: &[Vec3; 3]) -> bool {
        let v = tri.map(|p| self.pose.inverse_transform_point(&p));
        triangle_overlaps_aabb(&v, &self.half)
    }
}

/// Triangle (in box coordinates) against the box `[-half, half]`.
fn triangle_overlaps_aabb(v: &[Vec3; 3], half: &Vec3) -> bool {
    // box face normals
    for i in 0..3 {
        let lo = v[0][i].min(v[1][i]).min(v[2][i]);
        let hi = v[0][i].max(v[1][i]).max(v[2][i]);
        if lo > half[i] || hi < -half[i] {
            return false;
        }
    }
    let edges = [v[1] - v[0], v[2] - v[1], v[0] - v[2]];
    // triangle normal
    let n = edges[0].cross(&edges[1]);
    let r = half.x * n.x.abs() + half.y * n.y.abs() + half.z * n.z.abs();
    if n.dot(&v[0]).abs() > r {
        return false;
    }
    // edge × box axis
    for e in &edges {
        for i in 0..3 {
            let mut axis_unit = Vec3::zeros();
            axis_unit[i] = 1.0;
            let a = axis_unit.cross(e);
            if a.norm_squared() < 1e-30 {
                continue;
            }
            let p = [a.dot(&v[0]), a.dot(&v[1]), a.dot(&v[2])];
            let lo = p[0].min(p[1]).min(p[2]);
            let hi = p[0].max(p[1]).max(p[2]);
            let r = half.x * a.x.abs() + half.y * a.y.abs() + half.z * a.z.abs();
            if lo > r || hi < -r {
                return false;
            }
        }
    }
    true
}
