//! Synthetic inputs with known ground truth, shared by tests, benches and the
//! command line.
//!
//! Descriptors here stand in for an external feature extractor: each keypoint
//! is described by random Fourier features of its position on the canonical
//! mesh, so the same physical surface point gets the same descriptor no matter
//! which camera saw it.

use nalgebra::UnitQuaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::{
    render_views, AlignmentError, DescriptorSet, ReferenceObservation, ViewBundle, ViewConfig,
    ViewRender,
};
use crate::geometry::{
    primitives, render_depth, Bvh, DepthImage, PinholeCamera, Pose, SimilarityTransform, TriMesh,
    Vec3,
};

/// Random Fourier features over 3D positions. The dot product of two
/// descriptors is `Σ cos(ω·(p − q))`, peaked at `p = q`.
#[derive(Debug, Clone)]
pub struct FeatureField {
    freqs: Vec<Vec3>,
}

impl FeatureField {
    pub fn new(seed: u64, count: usize, wavelength: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = std::f64::consts::TAU / wavelength;
        let freqs = (0..count)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let r = (1.0 - z * z).sqrt();
                k * Vec3::new(r * phi.cos(), r * phi.sin(), z)
            })
            .collect();
        Self { freqs }
    }

    pub fn dim(&self) -> usize {
        2 * self.freqs.len()
    }

    pub fn describe(&self, p: &Vec3) -> impl Iterator<Item = f32> + '_ {
        let p = *p;
        self.freqs.iter().flat_map(move |w| {
            let a = w.dot(&p);
            [a.cos() as f32, a.sin() as f32]
        })
    }

    /// Descriptors for every `stride`-th pixel (starting at `offset`) with
    /// finite depth. `to_canonical` maps lifted world points into the space
    /// the field is defined in.
    pub fn describe_depth(
        &self,
        camera: &PinholeCamera,
        depth: &DepthImage,
        stride: u32,
        offset: u32,
        to_canonical: impl Fn(&Vec3) -> Vec3,
    ) -> Result<DescriptorSet, AlignmentError> {
        let mut keypoints = Vec::new();
        let mut values = Vec::new();
        for j in (offset..depth.height()).step_by(stride as usize) {
            for i in (offset..depth.width()).step_by(stride as usize) {
                if let Some(z) = depth.get(i, j) {
                    let (u, v) = (i as f64 + 0.5, j as f64 + 0.5);
                    let p = to_canonical(&camera.lift(u, v, z as f64));
                    keypoints.push((u, v));
                    values.extend(self.describe(&p));
                }
            }
        }
        DescriptorSet::new(keypoints, values, self.dim())
    }
}

/// Three canonical-space meshes (arbitrary unit scale) without symmetry that
/// descriptors could not resolve.
pub fn alignment_primitives() -> Vec<TriMesh> {
    let block = primitives::cuboid("block", Vec3::new(1.0, 0.6, 0.4));
    let can = primitives::cylinder("can", 0.35, 1.0, 32);
    let mallet = TriMesh::merged(
        "mallet",
        &[
            primitives::cuboid("head", Vec3::new(0.8, 0.3, 0.3)).map_vertices(|v| v + Vec3::new(0.0, 0.0, 0.35)),
            primitives::cylinder("handle", 0.08, 0.7, 16),
        ],
    );
    vec![block, can, mallet]
}

#[derive(Debug, Clone)]
pub struct SelfAlignmentCase {
    /// Canonical mesh the views were rendered from.
    pub mesh: TriMesh,
    /// Canonical-to-metric transform used to build the reference.
    pub truth: SimilarityTransform,
    pub views: Vec<ViewBundle>,
    pub reference: ReferenceObservation,
    /// View the reference camera was derived from.
    pub source_view: usize,
}

/// Settings of the self-alignment fixture.
#[derive(Debug, Clone, Copy)]
pub struct SelfAlignmentConfig {
    pub views: ViewConfig,
    pub features: usize,
    /// Feature wavelength as a fraction of the mesh bounding radius.
    pub wavelength_factor: f64,
    pub stride: u32,
    /// Random rotation of the reference camera about the object, degrees.
    pub camera_jitter_deg: f64,
}

impl Default for SelfAlignmentConfig {
    fn default() -> Self {
        Self {
            views: ViewConfig::default(),
            features: 32,
            wavelength_factor: 0.5,
            stride: 2,
            camera_jitter_deg: 4.0,
        }
    }
}

/// Renders the canonical mesh from the hemisphere views, then observes the
/// metric mesh `truth(mesh)` from a jittered copy of one view camera carried
/// through `truth`. Both sides get descriptors from the same feature field.
pub fn self_alignment_case(
    mesh: &TriMesh,
    truth: SimilarityTransform,
    config: &SelfAlignmentConfig,
    seed: u64,
) -> Result<SelfAlignmentCase, AlignmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = mesh.aabb().center();
    let radius = mesh.bounding_radius(&center);
    let field = FeatureField::new(rng.random(), config.features, config.wavelength_factor * radius);

    let renders = render_views(mesh, &config.views)?;
    let views = renders
        .iter()
        .map(|r| {
            let d = field.describe_depth(&r.camera, &r.depth, config.stride, 0, |p| *p)?;
            ViewBundle::new(r.clone(), d)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let source_view = rng.random_range(0..renders.len());
    let ViewRender { camera, .. } = renders[source_view];
    let axis = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let jitter = UnitQuaternion::from_scaled_axis(axis.normalize() * config.camera_jitter_deg.to_radians());
    let about_center = Pose::from_translation(center)
        .compose(&Pose::from_rotation(jitter))
        .compose(&Pose::from_translation(-center));
    let canonical_pose = about_center.compose(&camera.pose);
    let metric_pose = Pose::new(
        truth.apply(&canonical_pose.position),
        truth.rotation * canonical_pose.orientation,
    );
    let ref_camera = camera.with_pose(metric_pose);
    let metric = mesh.transformed_similarity(&truth);
    let depth = render_depth(&Bvh::build(metric), &ref_camera);
    let inverse = truth.inverse();
    let descriptors = field.describe_depth(&ref_camera, &depth, config.stride, 1, |p| inverse.apply(p))?;
    let reference = ReferenceObservation::new(depth, ref_camera, descriptors, None)?;
    Ok(SelfAlignmentCase {
        mesh: mesh.clone(),
        truth,
        views,
        reference,
        source_view,
    })
}

/// A plausible canonical-to-metric transform: scale in `[0.05, 0.15]`, any
/// yaw with up to 10° of tilt, and a tabletop translation.
pub fn random_truth(rng: &mut impl Rng) -> SimilarityTransform {
    let tilt = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
    let tilt = if tilt.norm() > 0.0 { tilt.normalize() } else { Vec3::x() };
    let rotation = UnitQuaternion::from_scaled_axis(tilt * rng.random_range(0.0..10f64).to_radians())
        * UnitQuaternion::from_axis_angle(&Vec3::z_axis(), rng.random_range(0.0..std::f64::consts::TAU));
    SimilarityTransform::new(
        rng.random_range(0.05..0.15),
        rotation,
        Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(0.2..0.6), rng.random_range(0.0..0.1)),
    )
    .expect("positive scale")
}
