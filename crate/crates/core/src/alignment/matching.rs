use super::descriptors::dot;
use super::{AlignmentError, DescriptorSet, ReferenceObservation, ViewBundle};
use crate::geometry::{lift_pixels, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    /// Point in canonical mesh space.
    pub source: Vec3,
    /// Point in metric demonstration space.
    pub target: Vec3,
    /// Cosine similarity of the matched descriptors.
    pub similarity: f64,
}

/// Correspondences sorted by descending similarity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrespondenceSet {
    pairs: Vec<Correspondence>,
}

impl CorrespondenceSet {
    pub fn new(mut pairs: Vec<Correspondence>) -> Result<Self, AlignmentError> {
        if let Some(i) = pairs.iter().position(|p| {
            !(p.source.iter().chain(p.target.iter()).all(|v| v.is_finite())
                && p.similarity.is_finite())
        }) {
            return Err(AlignmentError::InvalidArgument(format!(
                "correspondence {i} has non-finite values"
            )));
        }
        pairs.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[Correspondence] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Best match of every query row among the candidate rows: `(index, cosine)`.
/// Ties keep the lowest candidate index.
fn nearest(query: &[Vec<f64>], candidates: &[Vec<f64>]) -> Vec<(usize, f64)> {
    query
        .iter()
        .map(|q| {
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            for (j, c) in candidates.iter().enumerate() {
                let s = dot(q, c);
                if s > best.1 {
                    best = (j, s);
                }
            }
            best
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewScores {
    pub best_view: usize,
    /// One score per input view, in input order.
    pub scores: Vec<f64>,
}

/// Scores each view by the mean of the `k` highest nearest-neighbor cosine
/// similarities of the reference descriptors against the view descriptors.
/// The best view is the highest score; ties go to the lowest view index.
pub fn score_views(
    views: &[ViewBundle],
    reference: &DescriptorSet,
    k: usize,
) -> Result<ViewScores, AlignmentError> {
    if views.is_empty() {
        return Err(AlignmentError::InvalidArgument("no views to score".into()));
    }
    if k == 0 {
        return Err(AlignmentError::InvalidArgument("k must be >= 1".into()));
    }
    if reference.is_empty() {
        return Err(AlignmentError::InvalidArgument("reference has no descriptors".into()));
    }
    let ref_rows = reference.normalized_rows();
    let mut scores = Vec::with_capacity(views.len());
    for v in views {
        if v.descriptors.dim() != reference.dim() {
            return Err(AlignmentError::InvalidArgument(format!(
                "view {} has descriptor dim {}, reference has {}",
                v.view_index,
                v.descriptors.dim(),
                reference.dim()
            )));
        }
        if v.descriptors.len() < k {
            return Err(AlignmentError::InvalidArgument(format!(
                "view {} has {} descriptors, fewer than k = {k}",
                v.view_index,
                v.descriptors.len()
            )));
        }
        let rows = v.descriptors.normalized_rows();
        let mut sims: Vec<f64> = nearest(&ref_rows, &rows).into_iter().map(|(_, s)| s).collect();
        sims.sort_by(|a, b| b.total_cmp(a));
        let top = &sims[..k.min(sims.len())];
        scores.push(top.iter().sum::<f64>() / top.len() as f64);
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        let b = scores[best];
        if *s > b || (*s == b && views[i].view_index < views[best].view_index) {
            best = i;
        }
    }
    Ok(ViewScores {
        best_view: views[best].view_index,
        scores,
    })
}

/// Mutual nearest-neighbor matches between reference and view descriptors,
/// the `k` most similar lifted to 3D on both sides. Matches without finite
/// depth on either side are skipped.
pub fn build_correspondences(
    best: &ViewBundle,
    reference: &ReferenceObservation,
    k: usize,
) -> Result<CorrespondenceSet, AlignmentError> {
    let ref_rows = reference.descriptors.normalized_rows();
    let view_rows = best.descriptors.normalized_rows();
    if ref_rows.is_empty() || view_rows.is_empty() {
        return Err(AlignmentError::InsufficientCorrespondences { found: 0 });
    }
    let r2v = nearest(&ref_rows, &view_rows);
    let v2r = nearest(&view_rows, &ref_rows);
    let mut mutual: Vec<(usize, usize, f64)> = r2v
        .iter()
        .enumerate()
        .filter(|(i, (j, _))| v2r[*j].0 == *i)
        .map(|(i, &(j, s))| (i, j, s))
        .collect();
    mutual.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    mutual.truncate(k);

    let ref_px: Vec<(f64, f64)> = mutual.iter().map(|m| reference.descriptors.keypoints()[m.0]).collect();
    let view_px: Vec<(f64, f64)> = mutual.iter().map(|m| best.descriptors.keypoints()[m.1]).collect();
    let tgt = lift_pixels(&reference.camera, &reference.depth, &ref_px);
    let src = lift_pixels(&best.camera, &best.depth, &view_px);

    let mut tgt_by_idx = vec![None; mutual.len()];
    for (p, &i) in tgt.points.iter().zip(&tgt.indices) {
        tgt_by_idx[i] = Some(*p);
    }
    let mut pairs = Vec::new();
    for (p, &i) in src.points.iter().zip(&src.indices) {
        if let Some(t) = tgt_by_idx[i] {
            pairs.push(Correspondence {
                source: *p,
                target: t,
                similarity: mutual[i].2,
            });
        }
    }
    if pairs.len() < 3 {
        return Err(AlignmentError::InsufficientCorrespondences { found: pairs.len() });
    }
    CorrespondenceSet::new(pairs)
}
