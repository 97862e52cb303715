use serde::{Deserialize, Serialize};

use super::{
    build_correspondences, canonicalize_mesh, ransac_umeyama, score_views, AlignmentError,
    RansacParams, ReferenceObservation, ViewBundle,
};
use crate::geometry::{canonical_quaternion, SimilarityTransform, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlignConfig {
    /// Top-k similarities averaged when scoring a view.
    pub view_k: usize,
    /// Mutual matches lifted into correspondences.
    pub match_k: usize,
    pub ransac: RansacParams,
    /// Extra factor applied to the estimated scale of the metric mesh.
    pub scale_correction: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            view_k: 30,
            match_k: 200,
            ransac: RansacParams::default(),
            scale_correction: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub mesh_id: String,
    pub best_view: usize,
    pub scale: f64,
    pub quaternion_wxyz: [f64; 4],
    pub translation: [f64; 3],
    pub inliers: usize,
    pub mean_residual_m: f64,
}

#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub report: AlignmentReport,
    pub transform: SimilarityTransform,
    pub view_scores: Vec<f64>,
    /// Canonicalized metric mesh resting on z = 0.
    pub metric_mesh: TriMesh,
}

pub fn align_mesh(
    mesh: &TriMesh,
    views: &[ViewBundle],
    reference: &ReferenceObservation,
    config: &AlignConfig,
) -> Result<AlignmentResult, AlignmentError> {
    let scores = score_views(views, &reference.descriptors, config.view_k)?;
    let best = views
        .iter()
        .find(|v| v.view_index == scores.best_view)
        .expect("best view comes from the input list");
    let pairs = build_correspondences(best, reference, config.match_k)?;
    let est = ransac_umeyama(&pairs, &config.ransac)?;
    let metric_mesh = canonicalize_mesh(mesh, &est.transform, config.scale_correction)?;
    let q = canonical_quaternion(&est.transform.rotation);
    log::info!(
        "{}: view {} scale {:.4} with {}/{} inliers",
        mesh.id,
        scores.best_view,
        est.transform.scale(),
        est.inliers.len(),
        pairs.len()
    );
    Ok(AlignmentResult {
        report: AlignmentReport {
            mesh_id: mesh.id.clone(),
            best_view: scores.best_view,
            scale: est.transform.scale(),
            quaternion_wxyz: [q.w, q.i, q.j, q.k],
            translation: est.transform.translation.into(),
            inliers: est.inliers.len(),
            mean_residual_m: est.mean_residual,
        },
        transform: est.transform,
        view_scores: scores.scores,
        metric_mesh,
    })
}
