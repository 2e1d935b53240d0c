//! Per-object sliding-window filtering: bounding spheres, observation cones,
//! cone voting, and occupancy-based caption resolution.

mod cone;
mod resolve;
mod sphere;
mod vote;

pub use crate::config::WindowConfig;
pub use cone::{cone_contains, observation_cone, Cone};
pub use resolve::{dominant_fragment, resolve_attributes};
pub use sphere::{bounding_sphere, Sphere, MIN_RADIUS};
pub use vote::{vote_filter, VoteOutcome};
