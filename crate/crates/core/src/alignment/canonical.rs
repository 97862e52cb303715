use super::AlignmentError;
use crate::geometry::{SimilarityTransform, TriMesh, Vec3};

/// Applies the estimated scale and rotation about the vertex centroid, times
/// `scale_correction`, then places the result with its centroid on the z axis
/// and its lowest vertex at z = 0. The estimated translation only locates the
/// object in the demonstration and is dropped.
pub fn canonicalize_mesh(
    mesh: &TriMesh,
    transform: &SimilarityTransform,
    scale_correction: f64,
) -> Result<TriMesh, AlignmentError> {
    if !(scale_correction.is_finite() && scale_correction > 0.0) {
        return Err(AlignmentError::InvalidArgument(format!(
            "scale correction must be positive, got {scale_correction}"
        )));
    }
    let c = mesh.centroid();
    let s = transform.scale() * scale_correction;
    let r = transform.rotation;
    let mapped = mesh.map_vertices(|v| s * (r * (v - c)));
    let shift = Vec3::new(0.0, 0.0, -mapped.min_z());
    Ok(mapped.map_vertices(|v| v + shift))
}

/// `(estimated − reference) / reference`.
pub fn relative_scale_error(estimated: f64, reference: f64) -> Result<f64, AlignmentError> {
    if !(reference.is_finite() && reference > 0.0) {
        return Err(AlignmentError::InvalidArgument(format!(
            "reference scale must be positive, got {reference}"
        )));
    }
    Ok((estimated - reference) / reference)
}
