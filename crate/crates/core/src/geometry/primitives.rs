//! Procedural meshes used for bundled tasks, fixtures and tests. All faces
//! wind counter-clockwise when seen from outside.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::{TriMesh, Vec3};

/// Axis-aligned box centered at the origin.
pub fn cuboid(id: &str, size: Vec3) -> TriMesh {
    let h = size / 2.0;
    let mut vertices = Vec::with_capacity(8);
    for &z in &[-h.z, h.z] {
        for &y in &[-h.y, h.y] {
            for &x in &[-h.x, h.x] {
                vertices.push(Vec3::new(x, y, z));
            }
        }
    }
    // vertex index = x + 2y + 4z with bits for the positive side
    let quads: [[u32; 4]; 6] = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriMesh::new(id, vertices, triangles).expect("cuboid is well formed")
}

/// Axis-aligned box spanning `min..max`.
pub fn cuboid_between(id: &str, min: Vec3, max: Vec3) -> TriMesh {
    let c = (min + max) / 2.0;
    cuboid(id, max - min).map_vertices(|v| v + c)
}

/// Geodesic sphere from a subdivided icosahedron, centered at the origin.
pub fn icosphere(id: &str, radius: f64, subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = ((verts[a as usize] + verts[b as usize]) / 2.0).normalize();
                verts.push(m);
                (verts.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    TriMesh::new(id, vertices, faces).expect("icosphere is well formed")
}

/// Capped cylinder with its axis along z, centered at the origin.
pub fn cylinder(id: &str, radius: f64, height: f64, segments: u32) -> TriMesh {
    let segments = segments.max(3);
    let h = height / 2.0;
    let mut vertices = Vec::with_capacity(2 * segments as usize + 2);
    for k in 0..segments {
        let a = 2.0 * PI * k as f64 / segments as f64;
        vertices.push(Vec3::new(radius * a.cos(), radius * a.sin(), -h));
        vertices.push(Vec3::new(radius * a.cos(), radius * a.sin(), h));
    }
    let bottom = vertices.len() as u32;
    vertices.push(Vec3::new(0.0, 0.0, -h));
    let top = bottom + 1;
    vertices.push(Vec3::new(0.0, 0.0, h));
    let mut triangles = Vec::with_capacity(4 * segments as usize);
    for k in 0..segments {
        let b0 = 2 * k;
        let t0 = b0 + 1;
        let b1 = 2 * ((k + 1) % segments);
        let t1 = b1 + 1;
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
        triangles.push([bottom, b1, b0]);
        triangles.push([top, t0, t1]);
    }
    TriMesh::new(id, vertices, triangles).expect("cylinder is well formed")
}

/// Open-top tray resting on z = 0: a floor slab plus four walls.
pub fn tray(id: &str, outer: Vec3, wall: f64, floor: f64) -> TriMesh {
    let (hx, hy, hz) = (outer.x / 2.0, outer.y / 2.0, outer.z);
    let parts = [
        cuboid_between("floor", Vec3::new(-hx, -hy, 0.0), Vec3::new(hx, hy, floor)),
        cuboid_between("wx-", Vec3::new(-hx, -hy, floor), Vec3::new(-hx + wall, hy, hz)),
        cuboid_between("wx+", Vec3::new(hx - wall, -hy, floor), Vec3::new(hx, hy, hz)),
        cuboid_between(
            "wy-",
            Vec3::new(-hx + wall, -hy, floor),
            Vec3::new(hx - wall, -hy + wall, hz),
        ),
        cuboid_between(
            "wy+",
            Vec3::new(-hx + wall, hy - wall, floor),
            Vec3::new(hx - wall, hy, hz),
        ),
    ];
    TriMesh::merged(id, &parts)
}

/// Square in the z = 0 plane facing +z.
pub fn quad(id: &str, half_x: f64, half_y: f64) -> TriMesh {
    let vertices = vec![
        Vec3::new(-half_x, -half_y, 0.0),
        Vec3::new(half_x, -half_y, 0.0),
        Vec3::new(half_x, half_y, 0.0),
        Vec3::new(-half_x, half_y, 0.0),
    ];
    TriMesh::new(id, vertices, vec![[0, 1, 2], [0, 2, 3]]).expect("quad is well formed")
}
