//! Canonical-to-metric mesh alignment.
//!
//! A candidate mesh is rendered from hemisphere viewpoints, the view whose
//! descriptors best match the demonstration reference is selected, matched
//! keypoints are lifted to 3D on both sides and a similarity transform is
//! estimated with Umeyama inside RANSAC.

use std::path::{Path, PathBuf};

use crate::geometry::GeometryError;

mod canonical;
mod descriptors;
mod matching;
mod pipeline;
mod ransac;
mod umeyama;
mod views;

pub use canonical::{canonicalize_mesh, relative_scale_error};
pub use descriptors::DescriptorSet;
pub use matching::{build_correspondences, score_views, Correspondence, CorrespondenceSet, ViewScores};
pub use pipeline::{align_mesh, AlignConfig, AlignmentReport, AlignmentResult};
pub use ransac::{ransac_umeyama, RansacEstimate, RansacParams, MIN_SAMPLE_AREA};
pub use umeyama::{mean_squared_residual, umeyama, DEGENERATE_EIGENVALUE};
pub use views::{
    load_reference, load_views, render_views, save_reference, save_views, view_cameras,
    ReferenceObservation, ViewBundle, ViewConfig, ViewRender,
};

#[derive(Debug, thiserror::Error)]
pub enum AlignmentError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("insufficient correspondences: {found} liftable pairs, need 3")]
    InsufficientCorrespondences { found: usize },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("alignment failed: {0}")]
    AlignmentFailed(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl AlignmentError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        AlignmentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
