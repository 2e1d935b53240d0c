//! Frame ingestion: manifests, masks, depth unprojection.

mod camera;
mod image;
mod mask;
mod sequence;

use thiserror::Error;

pub use camera::{back_project, project, unproject, CameraIntrinsics, Pose};
pub use image::{ColorImage, DepthImage};
pub use mask::Mask2d;
pub use sequence::{
    intersect_segmentation, read_sequence, write_manifest, Detection2d, FrameRecord, SequenceReader,
};

/// Depth beyond this many meters is treated as an outlier.
pub const DEFAULT_MAX_DEPTH: f64 = 10.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("mask error: {0}")]
    Mask(String),
    #[error("camera error: {0}")]
    Camera(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("image {0}: {1}")]
    Image(String, String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("no valid depth under the mask")]
    EmptyFragment,
}
