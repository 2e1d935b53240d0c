//! Scene model: geometry (boxes, clouds) and semantics (captions, relations)
//! of the diverse semantic map, plus its on-disk format.

mod cloud;
mod geometry;
mod map;
mod persist;

use std::path::Path;

use thiserror::Error;

pub use cloud::{PointCloud, UNLABELED};
pub use geometry::{aabb_contains, aabb_contains_within, aabb_iou, Aabb3, Point3};
pub use map::{
    DsmMap, Fragment, ObjectId, ObservedRelation, Relation, SceneObject, SemanticCaption,
    SpatialDescriptor,
};
pub use persist::{decode_map, encode_map, load_map, save_map, FORMAT_VERSION, SIDECAR_THRESHOLD};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("map is empty")]
    EmptyMap,
    #[error("object {0} has an empty point cloud")]
    EmptyCloud(ObjectId),
    #[error("invalid caption: {0}")]
    InvalidCaption(String),
    #[error("invalid object {0}: {1}")]
    InvalidObject(ObjectId, String),
    #[error("invalid relation: {0}")]
    InvalidRelation(String),
    #[error("parse error in {record}: {message}")]
    Parse { record: String, message: String },
    #[error("unsupported map version {found} (expected {expected})")]
    Version { found: u64, expected: u32 },
    #[error("format error: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SceneError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SceneError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
