use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{umeyama, AlignmentError, CorrespondenceSet};
use crate::geometry::{SimilarityTransform, Vec3};

/// Minimal samples whose source triangle is smaller than this (m²) are
/// skipped as near-collinear.
pub const MIN_SAMPLE_AREA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacParams {
    pub iterations: usize,
    /// Meters.
    pub inlier_threshold: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 500,
            inlier_threshold: 0.01,
            min_inliers: 6,
            seed: 0,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<(), AlignmentError> {
        if self.iterations == 0 {
            return Err(AlignmentError::InvalidArgument("ransac iterations must be >= 1".into()));
        }
        if !(self.inlier_threshold.is_finite() && self.inlier_threshold > 0.0) {
            return Err(AlignmentError::InvalidArgument(
                "ransac inlier threshold must be positive".into(),
            ));
        }
        if self.min_inliers < 3 {
            return Err(AlignmentError::InvalidArgument("ransac min_inliers must be >= 3".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacEstimate {
    pub transform: SimilarityTransform,
    /// Indices into the correspondence set, ascending.
    pub inliers: Vec<usize>,
    /// Mean inlier residual of the refit transform, meters.
    pub mean_residual: f64,
}

/// Robust similarity estimate: repeatedly fit three random non-collinear
/// pairs, keep the largest consensus (ties go to the lower residual sum) and
/// refit on its inliers. Deterministic for a given seed.
pub fn ransac_umeyama(
    correspondences: &CorrespondenceSet,
    params: &RansacParams,
) -> Result<RansacEstimate, AlignmentError> {
    params.validate()?;
    let pairs = correspondences.pairs();
    let n = pairs.len();
    if n < params.min_inliers {
        return Err(AlignmentError::AlignmentFailed(format!(
            "{n} correspondences is fewer than min_inliers = {}",
            params.min_inliers
        )));
    }
    let source: Vec<Vec3> = pairs.iter().map(|p| p.source).collect();
    let target: Vec<Vec3> = pairs.iter().map(|p| p.target).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..params.iterations {
        let sample = index::sample(&mut rng, n, 3).into_vec();
        let [a, b, c] = [sample[0], sample[1], sample[2]].map(|i| source[i]);
        if 0.5 * (b - a).cross(&(c - a)).norm() <= MIN_SAMPLE_AREA {
            continue;
        }
        let s3: Vec<Vec3> = sample.iter().map(|&i| source[i]).collect();
        let t3: Vec<Vec3> = sample.iter().map(|&i| target[i]).collect();
        let Ok(model) = umeyama(&s3, &t3) else {
            continue;
        };
        let mut inliers = Vec::new();
        let mut residual_sum = 0.0;
        for i in 0..n {
            let r = (target[i] - model.apply(&source[i])).norm();
            if r < params.inlier_threshold {
                inliers.push(i);
                residual_sum += r;
            }
        }
        let better = match &best {
            None => true,
            Some((bi, br)) => {
                inliers.len() > bi.len() || (inliers.len() == bi.len() && residual_sum < *br)
            }
        };
        if better {
            best = Some((inliers, residual_sum));
        }
    }

    let Some((inliers, _)) = best else {
        return Err(AlignmentError::AlignmentFailed(
            "no non-degenerate minimal sample found".into(),
        ));
    };
    if inliers.len() < params.min_inliers {
        return Err(AlignmentError::AlignmentFailed(format!(
            "best consensus has {} inliers, need {}",
            inliers.len(),
            params.min_inliers
        )));
    }
    let s_in: Vec<Vec3> = inliers.iter().map(|&i| source[i]).collect();
    let t_in: Vec<Vec3> = inliers.iter().map(|&i| target[i]).collect();
    let transform = umeyama(&s_in, &t_in)?;
    let mean_residual = s_in
        .iter()
        .zip(&t_in)
        .map(|(s, t)| (t - transform.apply(s)).norm())
        .sum::<f64>()
        / inliers.len() as f64;
    // automated stand-in for manual match verification
    if mean_residual >= params.inlier_threshold {
        return Err(AlignmentError::AlignmentFailed(format!(
            "refit mean residual {mean_residual:.4} m exceeds threshold {}",
            params.inlier_threshold
        )));
    }
    Ok(RansacEstimate {
        transform,
        inliers,
        mean_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::Correspondence;
    use nalgebra::UnitQuaternion;
    use rand::Rng;

    fn planted(
        seed: u64,
        inliers: usize,
        outliers: usize,
    ) -> (CorrespondenceSet, SimilarityTransform) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = SimilarityTransform::new(
            rng.random_range(0.5..2.0),
            UnitQuaternion::from_euler_angles(
                rng.random_range(-3.0..3.0),
                rng.random_range(-1.5..1.5),
                rng.random_range(-3.0..3.0),
            ),
            Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.3),
        )
        .unwrap();
        let mut pairs = Vec::new();
        for i in 0..inliers + outliers {
            let s = Vec3::new(
                rng.random_range(-0.25..0.25),
                rng.random_range(-0.25..0.25),
                rng.random_range(-0.25..0.25),
            );
            let t = if i < inliers {
                truth.apply(&s)
            } else {
                truth.translation
                    + Vec3::new(
                        rng.random_range(-0.25..0.25),
                        rng.random_range(-0.25..0.25),
                        rng.random_range(-0.25..0.25),
                    )
            };
            // similarity encodes the planted index so the sort keeps it recoverable
            pairs.push(Correspondence {
                source: s,
                target: t,
                similarity: 1.0 - i as f64 * 1e-3,
            });
        }
        (CorrespondenceSet::new(pairs).unwrap(), truth)
    }

    #[test]
    fn exact_inliers_only() {
        let (c, truth) = planted(1, 30, 0);
        let est = ransac_umeyama(&c, &RansacParams::default()).unwrap();
        assert_eq!(est.inliers.len(), 30);
        assert!((est.transform.scale() - truth.scale()).abs() < 1e-7);
        assert!(est.transform.rotation.angle_to(&truth.rotation) < 1e-7);
        assert!((est.transform.translation - truth.translation).norm() < 1e-7);
    }

    #[test]
    fn half_outliers_recovers_planted_inliers() {
        let (c, truth) = planted(2, 20, 20);
        let params = RansacParams {
            inlier_threshold: 0.005,
            ..Default::default()
        };
        let est = ransac_umeyama(&c, &params).unwrap();
        assert_eq!(est.inliers, (0..20).collect::<Vec<_>>());
        assert!((est.transform.scale() - truth.scale()).abs() < 1e-4);
        assert!((est.transform.translation - truth.translation).norm() < 1e-4);
        assert!(est.transform.rotation.angle_to(&truth.rotation) < 1e-4);
    }

    #[test]
    fn too_few_inliers_fails() {
        let (c, _) = planted(3, 2, 38);
        let params = RansacParams {
            min_inliers: 10,
            ..Default::default()
        };
        assert!(matches!(
            ransac_umeyama(&c, &params),
            Err(AlignmentError::AlignmentFailed(_))
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let (c, _) = planted(4, 15, 15);
        let p = RansacParams {
            seed: 77,
            ..Default::default()
        };
        let a = ransac_umeyama(&c, &p).unwrap();
        let b = ransac_umeyama(&c, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.transform.scale().to_bits(), b.transform.scale().to_bits());
    }

    #[test]
    fn invalid_params_rejected() {
        let (c, _) = planted(5, 10, 0);
        for p in [
            RansacParams { iterations: 0, ..Default::default() },
            RansacParams { inlier_threshold: 0.0, ..Default::default() },
            RansacParams { min_inliers: 2, ..Default::default() },
        ] {
            assert!(matches!(ransac_umeyama(&c, &p), Err(AlignmentError::InvalidArgument(_))));
        }
    }
}
