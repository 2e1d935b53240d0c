use serde::{Deserialize, Serialize};

use super::CandidateObservation;
use crate::config::FusionConfig;
use crate::perception::{FeatureVector, PerceptionError};
use crate::scene::{aabb_contains_within, aabb_iou, Aabb3, SceneObject};

pub fn visual_similarity(p: &FeatureVector, q: &FeatureVector) -> Result<f64, PerceptionError> {
    p.cosine(q)
}

pub fn semantic_similarity(p: &FeatureVector, q: &FeatureVector) -> Result<f64, PerceptionError> {
    p.cosine(q)
}

/// `s_g0` when either box contains the other up to `margin`, IoU otherwise.
pub fn geometric_similarity(p: &Aabb3, q: &Aabb3, s_g0: f64, margin: f64) -> f64 {
    if aabb_contains_within(p, q, margin) || aabb_contains_within(q, p, margin) {
        s_g0
    } else {
        aabb_iou(p, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub s_v: f64,
    pub s_g: f64,
    pub s_c: f64,
    pub total: f64,
    /// No component fell below its gate.
    pub gated: bool,
    /// Gated and the total exceeds the merge threshold.
    pub matched: bool,
}

impl MatchScore {
    /// Combines component scores under the gates of `cfg`.
    pub fn from_components(s_v: f64, s_g: f64, s_c: f64, cfg: &FusionConfig) -> Self {
        let total = s_v + s_g + s_c;
        let gated = !(s_v < cfg.t_v || s_c < cfg.t_x || s_g < cfg.t_g);
        Self {
            s_v,
            s_g,
            s_c,
            total,
            gated,
            matched: gated && total > cfg.total_threshold,
        }
    }
}

pub fn match_score(
    obj: &SceneObject,
    cand: &CandidateObservation,
    cfg: &FusionConfig,
) -> Result<MatchScore, PerceptionError> {
    let s_v = visual_similarity(&obj.f_v, &cand.f_v)?;
    let s_g = geometric_similarity(&obj.bbox, &cand.bbox, cfg.s_g0, cfg.containment_margin);
    let s_c = semantic_similarity(&obj.f_s, &cand.f_s)?;
    Ok(MatchScore::from_components(s_v, s_g, s_c, cfg))
}
