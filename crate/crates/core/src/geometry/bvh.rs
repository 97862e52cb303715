//! Bounding volume hierarchy over a triangle mesh.
//!
//! Nodes are stored flat; interior nodes hold child indices and leaves hold a
//! range into a permutation of the triangle ids. Traversal visits the nearer
//! child first and prunes on the best hit found so far. Ties in hit distance
//! resolve to the lower triangle id so results match an exhaustive scan
//! exactly.

use super::{TriMesh, Vec3};

const LEAF_SIZE: usize = 4;
const PARALLEL_EPS: f64 = 1e-12;
/// Hits closer than this along the ray are ignored.
pub const MIN_HIT_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) / 2.0
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn is_finite(&self) -> bool {
        self.min.iter().chain(self.max.iter()).all(|v| v.is_finite())
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Entry distance of the ray into the box, if it enters before `t_max`.
    fn ray_entry(&self, origin: &Vec3, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for i in 0..3 {
            let mut near = (self.min[i] - origin[i]) * inv_dir[i];
            let mut far = (self.max[i] - origin[i]) * inv_dir[i];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN from 0·∞ means the ray lies in the slab plane: keep going
            if near.is_nan() || far.is_nan() {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub triangle_id: usize,
    pub distance: f64,
    pub point: Vec3,
    /// Geometric normal, oriented against the ray.
    pub normal: Vec3,
}

/// Möller–Trumbore ray/triangle intersection. Returns the ray parameter.
pub fn intersect_triangle(origin: &Vec3, dir: &Vec3, tri: &[Vec3; 3]) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < PARALLEL_EPS {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > MIN_HIT_DISTANCE).then_some(t)
}

fn make_hit(mesh: &TriMesh, triangle_id: usize, t: f64, origin: &Vec3, dir: &Vec3) -> Hit {
    let mut normal = mesh.triangle_normal(triangle_id);
    if normal.dot(dir) > 0.0 {
        normal = -normal;
    }
    Hit {
        triangle_id,
        distance: t,
        point: origin + dir * t,
        normal,
    }
}

/// Nearest hit by testing every triangle. Reference for [`Bvh::raycast`].
pub fn raycast_brute_force(mesh: &TriMesh, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
    let mut best: Option<(f64, usize)> = None;
    for i in 0..mesh.triangles().len() {
        if let Some(t) = intersect_triangle(origin, dir, &mesh.triangle(i)) {
            if best.is_none_or(|(bt, bi)| t < bt || (t == bt && i < bi)) {
                best = Some((t, i));
            }
        }
    }
    best.map(|(t, i)| make_hit(mesh, i, t, origin, dir))
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, count: usize },
    Interior { left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    kind: NodeKind,
}

/// Acceleration structure owning its mesh.
#[derive(Debug, Clone)]
pub struct Bvh {
    mesh: TriMesh,
    nodes: Vec<Node>,
    order: Vec<usize>,
    tri_bounds: Vec<Aabb>,
}

impl Bvh {
    pub fn build(mesh: TriMesh) -> Self {
        let n = mesh.triangles().len();
        let tri_bounds: Vec<Aabb> = (0..n)
            .map(|i| Aabb::from_points(mesh.triangle(i).iter()))
            .collect();
        let centroids: Vec<Vec3> = tri_bounds.iter().map(Aabb::center).collect();
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::new();
        if n > 0 {
            build_node(&mut nodes, &mut order, 0, n, &tri_bounds, &centroids);
        }
        Self {
            mesh,
            nodes,
            order,
            tri_bounds,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map(|n| n.bounds).unwrap_or_else(Aabb::empty)
    }

    pub fn raycast(&self, origin: &Vec3, dir: &Vec3) -> Option<Hit> {
        self.raycast_within(origin, dir, f64::INFINITY)
    }

    /// Nearest hit with distance `<= t_max`.
    pub fn raycast_within(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = dir.map(|d| 1.0 / d);
        let mut best: Option<(f64, usize)> = None;
        let mut limit = t_max;
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        if let Some(t) = self.nodes[0].bounds.ray_entry(origin, &inv_dir, limit) {
            stack.push((0, t));
        }
        while let Some((ni, entry)) = stack.pop() {
            // equal entry must still be visited: it may hold a lower triangle id
            if entry > limit {
                continue;
            }
            match self.nodes[ni].kind {
                NodeKind::Leaf { start, count } => {
                    for &tri in &self.order[start..start + count] {
                        if let Some(t) =
                            intersect_triangle(origin, dir, &self.mesh.triangle(tri))
                        {
                            if t <= limit
                                && best.is_none_or(|(bt, bi)| t < bt || (t == bt && tri < bi))
                            {
                                best = Some((t, tri));
                                limit = t;
                            }
                        }
                    }
                }
                NodeKind::Interior { left, right } => {
                    let l = self.nodes[left].bounds.ray_entry(origin, &inv_dir, limit);
                    let r = self.nodes[right].bounds.ray_entry(origin, &inv_dir, limit);
                    match (l, r) {
                        (Some(tl), Some(tr)) => {
                            // push the farther one first so the nearer pops next
                            if tl <= tr {
                                stack.push((right, tr));
                                stack.push((left, tl));
                            } else {
                                stack.push((left, tl));
                                stack.push((right, tr));
                            }
                        }
                        (Some(tl), None) => stack.push((left, tl)),
                        (None, Some(tr)) => stack.push((right, tr)),
                        (None, None) => {}
                    }
                }
            }
        }
        best.map(|(t, i)| make_hit(&self.mesh, i, t, origin, dir))
    }

    /// Every triangle id appears in exactly one leaf and lies in its box.
    pub fn check_structure(&self) -> Result<(), String> {
        let n = self.mesh.triangles().len();
        let mut seen = vec![0u32; n];
        for node in &self.nodes {
            if let NodeKind::Leaf { start, count } = node.kind {
                for &tri in &self.order[start..start + count] {
                    seen[tri] += 1;
                    let b = &self.tri_bounds[tri];
                    if !(node.bounds.contains(&b.min) && node.bounds.contains(&b.max)) {
                        return Err(format!("triangle {tri} escapes its leaf box"));
                    }
                }
            }
        }
        match seen.iter().position(|&c| c != 1) {
            Some(i) => Err(format!("triangle {i} appears in {} leaves", seen[i])),
            None => Ok(()),
        }
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    tri_bounds: &[Aabb],
    centroids: &[Vec3],
) -> usize {
    let mut bounds = order[start..end]
        .iter()
        .fold(Aabb::empty(), |b, &i| b.union(&tri_bounds[i]));
    // pad so rounding in the slab test never rejects a face-aligned hit
    let pad = 1e-9 * (bounds.extent().max() + 1.0);
    bounds.min -= Vec3::repeat(pad);
    bounds.max += Vec3::repeat(pad);
    let index = nodes.len();
    nodes.push(Node {
        bounds,
        kind: NodeKind::Leaf {
            start,
            count: end - start,
        },
    });
    let count = end - start;
    if count <= LEAF_SIZE {
        return index;
    }
    let cb = Aabb::from_points(order[start..end].iter().map(|&i| &centroids[i]));
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    if ext[axis] <= 0.0 {
        return index;
    }
    let mid = start + count / 2;
    order[start..end].select_nth_unstable_by(count / 2, |&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });
    let left = build_node(nodes, order, start, mid, tri_bounds, centroids);
    let right = build_node(nodes, order, mid, end, tri_bounds, centroids);
    nodes[index].kind = NodeKind::Interior { left, right };
    index
}
