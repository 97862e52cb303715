use std::fmt::Write as _;
use std::path::Path;

use super::{Aabb, GeometryError, Pose, SimilarityTransform, Vec3};

/// Triangles with an area below this are dropped at construction.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Indexed triangle mesh in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub id: String,
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    /// Validates indices and drops degenerate triangles.
    pub fn new(
        id: impl Into<String>,
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self, GeometryError> {
        let id = id.into();
        if let Some((i, v)) = vertices
            .iter()
            .enumerate()
            .find(|(_, v)| !v.iter().all(|c| c.is_finite()))
        {
            return Err(GeometryError::InvalidMesh(format!(
                "mesh {id}: vertex {i} is not finite ({v:?})"
            )));
        }
        let n = vertices.len() as u32;
        let mut kept = Vec::with_capacity(triangles.len());
        let mut dropped = 0usize;
        for (ti, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(GeometryError::InvalidMesh(format!(
                    "mesh {id}: triangle {ti} references vertex out of range ({tri:?}, {n} vertices)"
                )));
            }
            let [a, b, c] = tri.map(|i| vertices[i as usize]);
            if 0.5 * (b - a).cross(&(c - a)).norm() < MIN_TRIANGLE_AREA {
                dropped += 1;
                continue;
            }
            kept.push(*tri);
        }
        if dropped > 0 {
            log::warn!("mesh {id}: dropped {dropped} degenerate triangles");
        }
        Ok(Self {
            id,
            vertices,
            triangles: kept,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> [Vec3; 3] {
        self.triangles[i].map(|k| self.vertices[k as usize])
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle(i);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal following the right-hand winding of the triangle.
    pub fn triangle_normal(&self, i: usize) -> Vec3 {
        let [a, b, c] = self.triangle(i);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Mean of the vertex positions.
    pub fn centroid(&self) -> Vec3 {
        if self.vertices.is_empty() {
            return Vec3::zeros();
        }
        self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64
    }

    pub fn min_z(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.z)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounding_radius(&self, center: &Vec3) -> f64 {
        self.vertices
            .iter()
            .map(|v| (v - center).norm())
            .fold(0.0, f64::max)
    }

    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> TriMesh {
        TriMesh {
            id: self.id.clone(),
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn transformed(&self, pose: &Pose) -> TriMesh {
        self.map_vertices(|v| pose.transform_point(v))
    }

    pub fn transformed_similarity(&self, t: &SimilarityTransform) -> TriMesh {
        self.map_vertices(|v| t.apply(v))
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Concatenates meshes into one, keeping the id of the first.
    pub fn merged(id: impl Into<String>, meshes: &[TriMesh]) -> TriMesh {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for m in meshes {
            let off = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            triangles.extend(m.triangles.iter().map(|t| t.map(|i| i + off)));
        }
        TriMesh {
            id: id.into(),
            vertices,
            triangles,
        }
    }

    /// Parses the `v`/`f` subset of Wavefront OBJ. Faces with more than three
    /// vertices are fan-triangulated; `f a/b/c` forms and negative indices are
    /// accepted.
    pub fn from_obj_str(id: impl Into<String>, text: &str) -> Result<Self, GeometryError> {
        let id = id.into();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut it = line.split_whitespace();
            let bad = |msg: &str| GeometryError::Parse {
                line: lineno + 1,
                message: format!("{msg}: {raw:?}"),
            };
            match it.next() {
                Some("v") => {
                    let coords: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad("invalid vertex coordinate"))?;
                    if coords.len() != 3 {
                        return Err(bad("vertex needs three coordinates"));
                    }
                    vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let mut idx = Vec::new();
                    for tok in it {
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| bad("invalid face index"))?;
                        let resolved = match i {
                            0 => return Err(bad("face index 0 is invalid (OBJ is 1-based)")),
                            i if i > 0 => i - 1,
                            i => vertices.len() as i64 + i,
                        };
                        if resolved < 0 || resolved >= vertices.len() as i64 {
                            return Err(bad("face index out of range"));
                        }
                        idx.push(resolved as u32);
                    }
                    if idx.len() < 3 {
                        return Err(bad("face needs at least three vertices"));
                    }
                    for k in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        TriMesh::new(id, vertices, triangles)
    }

    pub fn load_obj(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        TriMesh::from_obj_str(id, &text)
    }

    pub fn to_obj_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.id);
        for v in &self.vertices {
            let _ = writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out
    }

    pub fn save_obj(&self, path: &Path) -> Result<(), GeometryError> {
        std::fs::write(path, self.to_obj_string()).map_err(|e| GeometryError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}
