use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AlignmentError, DescriptorSet};
use crate::geometry::{
    fibonacci_hemisphere, look_at, render_depth, Bvh, DepthImage, PinholeCamera, TriMesh, Vec3,
};

/// Render settings for the hemisphere views of a candidate mesh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewConfig {
    pub n_views: usize,
    pub vfov_deg: f64,
    /// Camera distance as a multiple of the bounding-sphere radius.
    pub distance_factor: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for ViewConfig {
    fn default() -> Self {
        Self {
            n_views: 41,
            vfov_deg: 60.0,
            distance_factor: 2.5,
            width: 96,
            height: 72,
        }
    }
}

/// One rendered view before descriptors are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewRender {
    pub view_index: usize,
    /// Viewing direction in mesh coordinates (camera +z).
    pub direction: Vec3,
    pub camera: PinholeCamera,
    pub depth: DepthImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewBundle {
    pub view_index: usize,
    /// Viewing direction in mesh coordinates (camera +z).
    pub direction: Vec3,
    pub camera: PinholeCamera,
    pub depth: DepthImage,
    pub descriptors: DescriptorSet,
}

impl ViewBundle {
    pub fn new(render: ViewRender, descriptors: DescriptorSet) -> Result<Self, AlignmentError> {
        if (render.direction - render.camera.forward()).norm() > 1e-6 {
            return Err(AlignmentError::InvalidArgument(format!(
                "view {} direction does not match its camera",
                render.view_index
            )));
        }
        if render.depth.width() != render.camera.width || render.depth.height() != render.camera.height {
            return Err(AlignmentError::InvalidArgument(format!(
                "view {} depth size differs from camera size",
                render.view_index
            )));
        }
        Ok(Self {
            view_index: render.view_index,
            direction: render.direction,
            camera: render.camera,
            depth: render.depth,
            descriptors,
        })
    }
}

/// Object-cropped demonstration observation in metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceObservation {
    pub depth: DepthImage,
    pub camera: PinholeCamera,
    pub descriptors: DescriptorSet,
    /// Row-major, same size as `depth`.
    pub object_mask: Vec<bool>,
}

impl ReferenceObservation {
    /// Without an explicit mask, the object is taken to be every pixel with
    /// finite depth.
    pub fn new(
        depth: DepthImage,
        camera: PinholeCamera,
        descriptors: DescriptorSet,
        object_mask: Option<Vec<bool>>,
    ) -> Result<Self, AlignmentError> {
        let (w, h) = (depth.width(), depth.height());
        let mask = object_mask.unwrap_or_else(|| depth.data().iter().map(|z| z.is_finite()).collect());
        if mask.len() != (w as usize) * (h as usize) {
            return Err(AlignmentError::InvalidArgument(format!(
                "mask has {} entries for a {w}x{h} image",
                mask.len()
            )));
        }
        for (k, &(u, v)) in descriptors.keypoints().iter().enumerate() {
            let inside = u >= 0.0
                && v >= 0.0
                && u < w as f64
                && v < h as f64
                && mask[v as usize * w as usize + u as usize];
            if !inside {
                return Err(AlignmentError::InvalidArgument(format!(
                    "reference keypoint {k} at ({u}, {v}) lies outside the object mask"
                )));
            }
        }
        Ok(Self {
            depth,
            camera,
            descriptors,
            object_mask: mask,
        })
    }
}

/// Cameras on a Fibonacci hemisphere around the mesh bounding-box center,
/// each looking at the center with world +z toward the top of the image.
pub fn view_cameras(mesh: &TriMesh, config: &ViewConfig) -> Result<Vec<PinholeCamera>, AlignmentError> {
    if mesh.is_empty() {
        return Err(AlignmentError::InvalidArgument("cannot render an empty mesh".into()));
    }
    let center = mesh.aabb().center();
    let distance = config.distance_factor * mesh.bounding_radius(&center);
    fibonacci_hemisphere(config.n_views)?
        .into_iter()
        .map(|d| {
            let pose = look_at(&(center + d * distance), &center, &Vec3::z());
            Ok(PinholeCamera::from_vertical_fov(config.width, config.height, config.vfov_deg, pose)?)
        })
        .collect()
}

pub fn render_views(mesh: &TriMesh, config: &ViewConfig) -> Result<Vec<ViewRender>, AlignmentError> {
    let cameras = view_cameras(mesh, config)?;
    let bvh = Bvh::build(mesh.clone());
    Ok(cameras
        .par_iter()
        .enumerate()
        .map(|(i, cam)| ViewRender {
            view_index: i,
            direction: cam.forward(),
            camera: *cam,
            depth: render_depth(&bvh, cam),
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct ViewEntry {
    view_index: usize,
    direction: [f64; 3],
    camera: PinholeCamera,
    depth: PathBuf,
    descriptors: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct ViewManifest {
    mesh_id: String,
    views: Vec<ViewEntry>,
}

#[derive(Serialize, Deserialize)]
struct ReferenceManifest {
    camera: PinholeCamera,
    depth: PathBuf,
    descriptors: PathBuf,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), AlignmentError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| AlignmentError::Format(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| AlignmentError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, AlignmentError> {
    let text = std::fs::read_to_string(path).map_err(|e| AlignmentError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| AlignmentError::Format(format!("{}: {e}", path.display())))
}

fn depth_name(i: usize) -> String {
    format!("view_{i:02}.depth")
}

fn descriptor_name(i: usize) -> String {
    format!("view_{i:02}.json")
}

/// Writes `views.json` plus one depth file per view into `dir`. The manifest
/// names a descriptor file per view; those are written too when
/// `descriptors` is given, otherwise an external extractor fills them in.
pub fn save_views(
    dir: &Path,
    mesh_id: &str,
    renders: &[ViewRender],
    descriptors: Option<&[DescriptorSet]>,
) -> Result<PathBuf, AlignmentError> {
    if let Some(d) = descriptors {
        if d.len() != renders.len() {
            return Err(AlignmentError::InvalidArgument(format!(
                "{} descriptor sets for {} views",
                d.len(),
                renders.len()
            )));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| AlignmentError::io(dir, e))?;
    let mut entries = Vec::with_capacity(renders.len());
    for (k, r) in renders.iter().enumerate() {
        let depth = depth_name(r.view_index);
        r.depth.save(&dir.join(&depth))?;
        let desc = descriptor_name(r.view_index);
        if let Some(d) = descriptors {
            d[k].save(&dir.join(&desc))?;
        }
        entries.push(ViewEntry {
            view_index: r.view_index,
            direction: r.direction.into(),
            camera: r.camera,
            depth: depth.into(),
            descriptors: desc.into(),
        });
    }
    let path = dir.join("views.json");
    write_json(
        &path,
        &ViewManifest {
            mesh_id: mesh_id.to_string(),
            views: entries,
        },
    )?;
    Ok(path)
}

/// Reads a view manifest; relative file names resolve against its directory.
/// Returns the mesh id and the bundles in manifest order.
pub fn load_views(manifest: &Path) -> Result<(String, Vec<ViewBundle>), AlignmentError> {
    let m: ViewManifest = read_json(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut out = Vec::with_capacity(m.views.len());
    for e in m.views {
        let depth = DepthImage::load(&base.join(&e.depth))?;
        let descriptors = DescriptorSet::load(&base.join(&e.descriptors))?;
        let render = ViewRender {
            view_index: e.view_index,
            direction: Vec3::from(e.direction),
            camera: e.camera,
            depth,
        };
        out.push(ViewBundle::new(render, descriptors)?);
    }
    Ok((m.mesh_id, out))
}

/// Writes `reference.json`, `reference.depth` and `reference_descriptors.json`.
pub fn save_reference(dir: &Path, reference: &ReferenceObservation) -> Result<PathBuf, AlignmentError> {
    std::fs::create_dir_all(dir).map_err(|e| AlignmentError::io(dir, e))?;
    reference.depth.save(&dir.join("reference.depth"))?;
    reference.descriptors.save(&dir.join("reference_descriptors.json"))?;
    let path = dir.join("reference.json");
    write_json(
        &path,
        &ReferenceManifest {
            camera: reference.camera,
            depth: "reference.depth".into(),
            descriptors: "reference_descriptors.json".into(),
        },
    )?;
    Ok(path)
}

pub fn load_reference(manifest: &Path) -> Result<ReferenceObservation, AlignmentError> {
    let m: ReferenceManifest = read_json(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let depth = DepthImage::load(&base.join(&m.depth))?;
    let descriptors = DescriptorSet::load(&base.join(&m.descriptors))?;
    ReferenceObservation::new(depth, m.camera, descriptors, None)
}
