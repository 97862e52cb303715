use nalgebra::{Matrix3, Rotation3, UnitQuaternion};

use super::AlignmentError;
use crate::geometry::{SimilarityTransform, Vec3};

/// Sources whose covariance has two eigenvalues below this are treated as
/// collinear.
pub const DEGENERATE_EIGENVALUE: f64 = 1e-12;

/// Closed-form least-squares similarity transform with `target ≈ s·R·source + t`.
///
/// Centroids and the cross-covariance feed an SVD; the last singular
/// direction is flipped when needed so that `det(R) = +1`.
pub fn umeyama(source: &[Vec3], target: &[Vec3]) -> Result<SimilarityTransform, AlignmentError> {
    if source.len() != target.len() {
        return Err(AlignmentError::InvalidArgument(format!(
            "umeyama needs equal lengths, got {} and {}",
            source.len(),
            target.len()
        )));
    }
    let n = source.len();
    if n < 3 {
        return Err(AlignmentError::InvalidArgument(format!(
            "umeyama needs at least 3 pairs, got {n}"
        )));
    }
    let inv_n = 1.0 / n as f64;
    let mu_s = source.iter().sum::<Vec3>() * inv_n;
    let mu_t = target.iter().sum::<Vec3>() * inv_n;

    let mut cov_src = Matrix3::zeros();
    let mut cross = Matrix3::zeros();
    for (s, t) in source.iter().zip(target) {
        let ds = s - mu_s;
        let dt = t - mu_t;
        cov_src += ds * ds.transpose();
        cross += dt * ds.transpose();
    }
    cov_src *= inv_n;
    cross *= inv_n;

    let mut eig = cov_src.symmetric_eigenvalues().as_slice().to_vec();
    eig.sort_by(f64::total_cmp);
    if eig[1] < DEGENERATE_EIGENVALUE {
        return Err(AlignmentError::DegenerateConfiguration(format!(
            "source points are collinear or coincident (eigenvalues {eig:?})"
        )));
    }
    let var_src = cov_src.trace();

    let svd = cross.svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    let d = svd.singular_values;
    let mut sign = Matrix3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        sign[(2, 2)] = -1.0;
    }
    // singular values are sorted descending, so the flip lands on the smallest
    let r = u * sign * v_t;
    let scale = (d[0] * sign[(0, 0)] + d[1] * sign[(1, 1)] + d[2] * sign[(2, 2)]) / var_src;
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let translation = mu_t - scale * (rotation * mu_s);
    SimilarityTransform::new(scale, rotation, translation).map_err(|_| {
        AlignmentError::DegenerateConfiguration(format!(
            "estimated scale {scale} is not positive"
        ))
    })
}

/// Mean squared residual `‖target − T(source)‖²`.
pub fn mean_squared_residual(t: &SimilarityTransform, source: &[Vec3], target: &[Vec3]) -> f64 {
    source
        .iter()
        .zip(target)
        .map(|(s, q)| (q - t.apply(s)).norm_squared())
        .sum::<f64>()
        / source.len().max(1) as f64
}
