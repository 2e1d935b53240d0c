//! Evaluation tooling: query generation, synthetic scenes, and grounding and
//! segmentation metrics.

mod labels;
mod metrics;
mod querygen;
pub mod suites;
mod synth;

use thiserror::Error;

pub use crate::config::{Gate, QueryGenConfig};
pub use labels::{class_list, gt_labeled_cloud, label_sentence, labeled_cloud, map_labels, LabelAssignment};
pub use metrics::{
    acc_at, eval_grounding, seg_metrics, GroundReport, KindStats, QueryOutcome, SegReport, MATCH_RADIUS,
};
pub use querygen::{generate_queries, name_counts, Attribute, GeneratedQuery, QueryKind};
pub use synth::{
    shapes_overlap, synth_scene, SceneSpec, Shape, SynthCamera, SynthFrame, SynthObject, SynthRelation, SynthScene,
    Trajectory, Viewpoint,
};

use crate::grounding::GroundingError;
use crate::ingest::IngestError;
use crate::perception::PerceptionError;
use crate::scene::SceneError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("map has no objects")]
    EmptyMap,
    #[error("no results to score")]
    NoResults,
    #[error("threshold {0} outside (0, 1]")]
    Threshold(f64),
    #[error("ground truth has no labeled points")]
    EmptyGroundTruth,
    #[error("{0} cloud carries no labels")]
    Unlabeled(&'static str),
    #[error("invalid scene spec: {0}")]
    Spec(String),
    #[error("invalid setting: {0}")]
    Config(String),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
