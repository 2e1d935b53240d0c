//! Diverse semantic mapping and 3D visual grounding.
//!
//! The map is built from posed RGB-D frames with precomputed detections:
//! [`ingest`] turns masks into world-frame fragments, [`perception`] attaches
//! features and captions, [`fusion`] associates fragments with objects, and
//! [`window`] filters each object's points by observation-cone voting.
//! [`grounding`] answers referring queries over a finished map and
//! [`evalgen`] produces synthetic scenes, queries and metrics.

pub mod config;
pub mod ingest;
pub mod perception;
pub mod scene;
pub mod text;
pub mod window;
pub mod fusion;
pub mod grounding;
pub mod evalgen;
pub mod pipeline;
