use serde::Serialize;

use super::camera::{place_camera, Level, RenderSpec};
use super::candidates::{extract_candidates, Candidates};
use super::query::{parse_query_rules, GroundingQuery};
use super::reasoner::{CandidateInfo, MockReasoner, Reasoner};
use super::relations::{rank_by_overlap, relation_sentences, take_topk, RelationSentence, TopK};
use super::render::{render_level, RenderedView};
use super::GroundingError;
use crate::config::{GroundingConfig, RenderConfig};
use crate::scene::{Aabb3, DsmMap, ObjectId, SceneObject};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundingResult {
    pub query: GroundingQuery,
    pub predicted_object_id: ObjectId,
    pub predicted_bbox: Aabb3,
    pub candidates: Candidates,
    /// Relation sentences kept by the filter, best first.
    pub top_relations: Vec<RelationSentence>,
    pub top_objects: Vec<ObjectId>,
    pub views: Vec<RenderSpec>,
    pub blank_views: Vec<Level>,
    pub raw_reply: String,
    /// Steps where the configured backend failed and the mock answered instead.
    pub fallbacks: Vec<String>,
}

/// Result plus the rendered rasters, which are not serialized.
#[derive(Debug, Clone)]
pub struct GroundingOutcome {
    pub result: GroundingResult,
    pub views: Vec<RenderedView>,
}

/// Caption text of `obj` with the attributes enabled in `cfg`.
pub fn caption_text(obj: &SceneObject, cfg: &GroundingConfig) -> String {
    let c = &obj.caption;
    let mut parts = vec![c.name.as_str()];
    for (on, s) in [
        (cfg.use_appearance, &c.appearance),
        (cfg.use_physical, &c.physical),
        (cfg.use_affordance, &c.affordance),
    ] {
        if on && !s.is_empty() {
            parts.push(s);
        }
    }
    parts.join(". ")
}

fn recoverable(e: &GroundingError) -> bool {
    matches!(e, GroundingError::Reply(_) | GroundingError::Backend(_))
}

/// Answers `q` over `map`: parse, extract candidates, filter relations to the
/// top `k`, render object/place/scene views, and let `reasoner` pick the target.
/// Reasoner failures on any step fall back to the mock answer and are listed
/// in `fallbacks`.
pub fn ground(
    map: &DsmMap,
    q: &str,
    cfg: &GroundingConfig,
    render: &RenderConfig,
    reasoner: &dyn Reasoner,
) -> Result<GroundingOutcome, GroundingError> {
    let mut fallbacks = Vec::new();
    let query = match reasoner.parse_query(q) {
        Ok(p) => p,
        Err(e) if recoverable(&e) => {
            fallbacks.push(format!("parse: {e}"));
            parse_query_rules(q)?
        }
        Err(e) => return Err(e),
    };
    let candidates = extract_candidates(&query, map)?;
    let sentences = relation_sentences(&candidates.targets, &candidates.anchors, map);

    let topk = if cfg.use_relation_filter {
        let ranking = match reasoner.rank_relations(q, &sentences) {
            Ok(r) => r,
            Err(e) if recoverable(&e) => {
                fallbacks.push(format!("rank: {e}"));
                rank_by_overlap(q, &sentences)
            }
            Err(e) => return Err(e),
        };
        take_topk(&sentences, &ranking, cfg.k, &candidates.targets)
    } else {
        TopK {
            sentences: Vec::new(),
            objects: candidates.targets.clone(),
        }
    };

    let focus = topk
        .sentences
        .first()
        .map(|s| s.anchor_id)
        .unwrap_or(candidates.targets[0]);
    let specs: Vec<RenderSpec> = Level::ALL
        .iter()
        .map(|&level| {
            let (pose, vfov_deg) = place_camera(map, focus, level, render);
            RenderSpec {
                level,
                pose,
                vfov_deg,
                width: render.width,
                height: render.height,
                highlighted: topk.objects.clone(),
            }
        })
        .collect();
    let views: Vec<RenderedView> = std::thread::scope(|s| {
        let handles: Vec<_> = specs.iter().map(|spec| s.spawn(move || render_level(map, spec))).collect();
        handles.into_iter().map(|h| h.join().expect("render thread")).collect()
    });

    let mut pool: Vec<ObjectId> = topk
        .objects
        .iter()
        .copied()
        .filter(|id| candidates.targets.contains(id))
        .collect();
    if pool.is_empty() {
        pool = candidates.targets.clone();
    }
    pool.sort();
    let infos: Vec<CandidateInfo> = pool
        .iter()
        .map(|id| {
            let mut text = caption_text(&map.objects[id], cfg);
            for s in topk.sentences.iter().filter(|s| s.subject_id == *id) {
                text.push_str(". ");
                text.push_str(&s.text);
            }
            CandidateInfo { id: *id, text }
        })
        .collect();
    let choice = match reasoner.choose_target(q, &views, &infos) {
        Ok(c) if pool.contains(&c.object) => c,
        Ok(c) => {
            fallbacks.push(format!("choose: id {} is not a candidate", c.object));
            MockReasoner.choose_target(q, &views, &infos)?
        }
        Err(e) if recoverable(&e) => {
            fallbacks.push(format!("choose: {e}"));
            MockReasoner.choose_target(q, &views, &infos)?
        }
        Err(e) => return Err(e),
    };
    let obj = &map.objects[&choice.object];
    let result = GroundingResult {
        query,
        predicted_object_id: obj.id,
        predicted_bbox: obj.bbox,
        candidates,
        top_relations: topk.sentences,
        top_objects: topk.objects,
        views: specs,
        blank_views: views.iter().filter(|v| v.blank).map(|v| v.spec.level).collect(),
        raw_reply: choice.raw,
        fallbacks,
    };
    Ok(GroundingOutcome { result, views })
}
