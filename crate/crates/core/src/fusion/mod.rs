//! Frame-to-map association by fused visual, geometric and semantic
//! similarity, plus relation upkeep.

mod associate;
mod relations;
mod score;

use thiserror::Error;

pub use crate::config::FusionConfig;
pub use associate::{associate_frame, AssociationReport, MatchRecord};
pub use relations::{
    describe, relation_distance, resolve_anchor, update_relations, RelationUpdate, CONTACT_GAP,
    FOOTPRINT_OVERLAP, NEAR_DISTANCE,
};
pub use score::{
    geometric_similarity, match_score, semantic_similarity, visual_similarity, MatchScore,
};

use crate::perception::{CaptionResult, FeatureVector, PerceptionError};
use crate::scene::{Aabb3, Point3, PointCloud, SceneError};

#[derive(Debug, Error)]
pub enum FusionError {
    #[error(transparent)]
    Feature(#[from] PerceptionError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("candidate {0} has an empty fragment")]
    EmptyCandidate(usize),
}

/// One detection of the current frame, ready for association.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateObservation {
    pub label: String,
    pub fragment: PointCloud,
    pub bbox: Aabb3,
    pub f_v: FeatureVector,
    pub f_s: FeatureVector,
    pub caption: CaptionResult,
    /// Camera center at this frame.
    pub viewpoint: Point3,
    pub frame_id: u64,
}

impl CandidateObservation {
    /// Builds a candidate, deriving the box from the fragment.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        fragment: PointCloud,
        f_v: FeatureVector,
        f_s: FeatureVector,
        caption: CaptionResult,
        viewpoint: Point3,
        frame_id: u64,
    ) -> Option<Self> {
        let bbox = fragment.aabb()?;
        Some(Self {
            label: label.into(),
            fragment,
            bbox,
            f_v,
            f_s,
            caption,
            viewpoint,
            frame_id,
        })
    }
}
