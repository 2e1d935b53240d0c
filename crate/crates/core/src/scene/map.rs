use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::cloud::PointCloud;
use super::geometry::{Aabb3, Point3};
use super::SceneError;
use crate::config::PipelineConfig;
use crate::perception::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Three-axis description of an object plus its short tag.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SemanticCaption {
    pub name: String,
    #[serde(default)]
    pub appearance: String,
    #[serde(default)]
    pub physical: String,
    #[serde(default)]
    pub affordance: String,
}

impl SemanticCaption {
    pub fn new(
        name: impl Into<String>,
        appearance: impl Into<String>,
        physical: impl Into<String>,
        affordance: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            appearance: appearance.into(),
            physical: physical.into(),
            affordance: affordance.into(),
        }
    }

    /// Caption with only a tag, used when attribute extraction fails.
    pub fn name_only(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.name.trim().is_empty() {
            return Err(SceneError::InvalidCaption("name is empty".into()));
        }
        Ok(())
    }

    pub fn has_attributes(&self) -> bool {
        !(self.appearance.is_empty() && self.physical.is_empty() && self.affordance.is_empty())
    }

    /// Text fed to the text encoder: the tag followed by every non-empty attribute.
    pub fn embedding_text(&self) -> String {
        let mut parts = vec![self.name.as_str()];
        parts.extend(
            [&self.appearance, &self.physical, &self.affordance]
                .into_iter()
                .filter(|s| !s.is_empty())
                .map(String::as_str),
        );
        parts.join(". ")
    }
}

/// A relation as reported by the captioner for one observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedRelation {
    #[serde(alias = "anchor")]
    pub anchor_label: String,
    #[serde(default)]
    pub spatial: String,
    #[serde(default)]
    pub semantic: String,
}

/// One observation of an object: where it was seen from, which cloud points it
/// still contributes, and what the captioner said at the time.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub frame_id: u64,
    pub viewpoint: Point3,
    /// Indices into the owning object's cloud of this observation's surviving points.
    pub point_indices: Vec<u32>,
    /// Number of points this observation contributed before filtering.
    pub observed: u32,
    pub caption: SemanticCaption,
    pub relations: Vec<ObservedRelation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: ObjectId,
    pub caption: SemanticCaption,
    pub cloud: PointCloud,
    pub bbox: Aabb3,
    pub f_v: FeatureVector,
    pub f_s: FeatureVector,
    pub fragments: Vec<Fragment>,
    /// Every point of the latest window was voted out; the cloud holds unfiltered points.
    pub tentative: bool,
    /// Window closed; geometry and caption no longer change.
    pub finalized: bool,
}

impl SceneObject {
    /// Creates an object from a single cloud. Fails on an empty cloud.
    pub fn new(
        id: ObjectId,
        caption: SemanticCaption,
        cloud: PointCloud,
        f_v: FeatureVector,
        f_s: FeatureVector,
    ) -> Result<Self, SceneError> {
        let bbox = cloud.aabb().ok_or(SceneError::EmptyCloud(id))?;
        Ok(Self {
            id,
            caption,
            cloud,
            bbox,
            f_v,
            f_s,
            fragments: Vec::new(),
            tentative: false,
            finalized: false,
        })
    }

    /// Recomputes the box from the cloud; keeps the previous box for an empty cloud.
    pub fn refresh_bbox(&mut self) {
        if let Some(b) = self.cloud.aabb() {
            self.bbox = b;
        }
    }

    pub fn center(&self) -> Point3 {
        self.bbox.center()
    }

    pub fn name(&self) -> &str {
        &self.caption.name
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.fragments.last().map(|f| f.frame_id)
    }
}

/// Geometric relation descriptor derived from the rule table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpatialDescriptor {
    Near,
    On,
    Above,
    Below,
    Inside,
    LeftOf,
    RightOf,
    InFrontOf,
    Behind,
}

impl SpatialDescriptor {
    pub const ALL: [SpatialDescriptor; 9] = [
        Self::Near,
        Self::On,
        Self::Above,
        Self::Below,
        Self::Inside,
        Self::LeftOf,
        Self::RightOf,
        Self::InFrontOf,
        Self::Behind,
    ];

    /// Natural-language phrase used in relation sentences and generated queries.
    pub fn phrase(self) -> &'static str {
        match self {
            Self::Near => "close by",
            Self::On => "on",
            Self::Above => "above",
            Self::Below => "below",
            Self::Inside => "inside",
            Self::LeftOf => "to the left of",
            Self::RightOf => "to the right of",
            Self::InFrontOf => "in front of",
            Self::Behind => "behind",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub subject_id: ObjectId,
    pub anchor_id: ObjectId,
    pub r_g_distance: f64,
    pub r_g_descriptor: SpatialDescriptor,
    pub r_s: String,
}

/// The diverse semantic map: fused objects, their relations, and the parameters used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct DsmMap {
    pub objects: BTreeMap<ObjectId, SceneObject>,
    pub relations: Vec<Relation>,
    pub scene_center: Option<Point3>,
    pub config_snapshot: PipelineConfig,
}

impl DsmMap {
    pub fn new(config: PipelineConfig) -> Self {
        Self {
            objects: BTreeMap::new(),
            relations: Vec::new(),
            scene_center: None,
            config_snapshot: config,
        }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn get(&self, id: ObjectId) -> Option<&SceneObject> {
        self.objects.get(&id)
    }

    pub fn next_id(&self) -> ObjectId {
        ObjectId(self.objects.keys().next_back().map_or(0, |k| k.0 + 1))
    }

    /// Inserts an object and refreshes the scene center.
    pub fn insert(&mut self, obj: SceneObject) {
        self.objects.insert(obj.id, obj);
        self.scene_center = self.recompute_scene_center().ok();
    }

    /// Mean of the object box centers.
    pub fn recompute_scene_center(&self) -> Result<Point3, SceneError> {
        if self.objects.is_empty() {
            return Err(SceneError::EmptyMap);
        }
        let sum = self
            .objects
            .values()
            .fold(Point3::ORIGIN, |acc, o| acc + o.bbox.center());
        Ok(sum / self.objects.len() as f64)
    }

    pub fn refresh_scene_center(&mut self) {
        self.scene_center = self.recompute_scene_center().ok();
    }

    /// Union of all object boxes.
    pub fn scene_bounds(&self) -> Option<Aabb3> {
        self.objects.values().map(|o| o.bbox).reduce(|a, b| a.union(&b))
    }

    pub fn relation(&self, subject: ObjectId, anchor: ObjectId) -> Option<&Relation> {
        self.relations
            .iter()
            .find(|r| r.subject_id == subject && r.anchor_id == anchor)
    }

    /// Checks the structural invariants of a map.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut seen = std::collections::HashSet::new();
        for r in &self.relations {
            if r.subject_id == r.anchor_id {
                return Err(SceneError::InvalidRelation(format!("self relation on {}", r.subject_id)));
            }
            for id in [r.subject_id, r.anchor_id] {
                if !self.objects.contains_key(&id) {
                    return Err(SceneError::InvalidRelation(format!("dangling endpoint {id}")));
                }
            }
            if r.r_g_distance.is_nan() || r.r_g_distance < 0.0 {
                return Err(SceneError::InvalidRelation(format!(
                    "negative distance on ({}, {})",
                    r.subject_id, r.anchor_id
                )));
            }
            if !seen.insert((r.subject_id, r.anchor_id)) {
                return Err(SceneError::InvalidRelation(format!(
                    "duplicate pair ({}, {})",
                    r.subject_id, r.anchor_id
                )));
            }
        }
        for (id, o) in &self.objects {
            if *id != o.id {
                return Err(SceneError::InvalidObject(*id, "key does not match id".into()));
            }
            o.caption
                .validate()
                .map_err(|e| SceneError::InvalidObject(*id, e.to_string()))?;
            if o.cloud.is_empty() {
                return Err(SceneError::EmptyCloud(*id));
            }
            if o.fragments.windows(2).any(|w| w[0].frame_id > w[1].frame_id) {
                return Err(SceneError::InvalidObject(*id, "fragments out of frame order".into()));
            }
        }
        Ok(())
    }
}
