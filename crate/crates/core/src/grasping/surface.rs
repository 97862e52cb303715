use nalgebra::UnitQuaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GraspError;
use crate::geometry::{Bvh, TriMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub point: Vec3,
    /// Unit outward normal.
    pub normal: Vec3,
    pub triangle_id: usize,
}

fn crossings(bvh: &Bvh, origin: &Vec3, dir: &Vec3) -> usize {
    let mut count = 0;
    let mut o = *origin;
    while let Some(h) = bvh.raycast(&o, dir) {
        count += 1;
        o = h.point + dir * 1e-7;
        if count > 10_000 {
            break;
        }
    }
    count
}

/// Per-triangle outward unit normals. For each triangle, three rays leave
/// the centroid on the side of the winding normal; an odd number of surface
/// crossings means that side is inside. The majority of the three votes
/// decides whether the normal is flipped. Open surfaces keep their winding.
pub fn outward_normals(mesh: &TriMesh) -> Vec<Vec3> {
    let bvh = Bvh::build(mesh.clone());
    let tilt = 20f64.to_radians();
    (0..mesh.triangles().len())
        .map(|i| {
            let n = mesh.triangle_normal(i);
            let t = mesh.triangle(i);
            let c = (t[0] + t[1] + t[2]) / 3.0;
            let e = (t[1] - t[0]).normalize();
            let f = n.cross(&e);
            let dirs = [
                n,
                UnitQuaternion::from_scaled_axis(e * tilt) * n,
                UnitQuaternion::from_scaled_axis(f * tilt) * n,
            ];
            let inside_votes = dirs
                .iter()
                .filter(|d| crossings(&bvh, &(c + n * 1e-7), d) % 2 == 1)
                .count();
            if inside_votes >= 2 {
                -n
            } else {
                n
            }
        })
        .collect()
}

/// Area-weighted uniform surface samples with outward normals.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<Vec<SurfaceSample>, GraspError> {
    if n == 0 {
        return Err(GraspError::InvalidArgument("sample count must be >= 1".into()));
    }
    let total = mesh.surface_area();
    if mesh.is_empty() || !(total > 0.0) {
        return Err(GraspError::InvalidArgument(format!("mesh {} has zero area", mesh.id)));
    }
    let normals = outward_normals(mesh);
    let mut cumulative = Vec::with_capacity(mesh.triangles().len());
    let mut acc = 0.0;
    for i in 0..mesh.triangles().len() {
        acc += mesh.triangle_area(i);
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let r = rng.random_range(0.0..acc);
            let tri = cumulative.partition_point(|&c| c <= r).min(cumulative.len() - 1);
            let [a, b, c] = mesh.triangle(tri);
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            let s = r1.sqrt();
            SurfaceSample {
                point: a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2),
                normal: normals[tri],
                triangle_id: tri,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;

    fn on_triangle(p: &Vec3, t: &[Vec3; 3]) -> bool {
        let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
        let area = n.norm();
        let nn = n / area;
        if (p - t[0]).dot(&nn).abs() > 1e-9 {
            return false;
        }
        let sub = |a: &Vec3, b: &Vec3| (a - p).cross(&(b - p)).dot(&nn);
        let w = [sub(&t[1], &t[2]), sub(&t[2], &t[0]), sub(&t[0], &t[1])];
        w.iter().all(|&x| x >= -1e-12 * area.max(1.0))
    }

    #[test]
    fn cube_faces_get_multinomial_counts() {
        let cube = primitives::cuboid("cube", Vec3::new(1.0, 1.0, 1.0));
        let s = sample_surface(&cube, 6000, 3).unwrap();
        let sigma = (6000.0 * (1.0 / 6.0) * (5.0 / 6.0) as f64).sqrt();
        let mut counts = [0usize; 6];
        for p in &s {
            let n = p.normal;
            let axis = (0..3).max_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
            counts[2 * axis + usize::from(n[axis] > 0.0)] += 1;
            assert!(on_triangle(&p.point, &cube.triangle(p.triangle_id)));
            assert!((p.normal.norm() - 1.0).abs() < 1e-9);
            // outward: normal points away from the center
            assert!(p.normal.dot(&p.point) > 0.0);
        }
        for c in counts {
            assert!((c as f64 - 1000.0).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn inverted_winding_is_corrected() {
        let cube = primitives::cuboid("cube", Vec3::new(0.04, 0.04, 0.04));
        let flipped = TriMesh::new(
            "inv",
            cube.vertices().to_vec(),
            cube.triangles().iter().map(|t| [t[0], t[2], t[1]]).collect(),
        )
        .unwrap();
        for (i, n) in outward_normals(&flipped).iter().enumerate() {
            let t = flipped.triangle(i);
            assert!(n.dot(&((t[0] + t[1] + t[2]) / 3.0)) > 0.0);
        }
    }

    #[test]
    fn single_triangle_and_determinism() {
        let tri = TriMesh::new(
            "t",
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let a = sample_surface(&tri, 200, 9).unwrap();
        assert!(a.iter().all(|s| s.triangle_id == 0 && on_triangle(&s.point, &tri.triangle(0))));
        assert_eq!(a, sample_surface(&tri, 200, 9).unwrap());
        assert_ne!(a, sample_surface(&tri, 200, 10).unwrap());
    }

    #[test]
    fn zero_area_and_zero_count_rejected() {
        let empty = TriMesh::new("e", vec![], vec![]).unwrap();
        assert!(sample_surface(&empty, 10, 0).is_err());
        let cube = primitives::cuboid("c", Vec3::new(1.0, 1.0, 1.0));
        assert!(sample_surface(&cube, 0, 0).is_err());
    }
}
