use serde::Serialize;

use super::score::{match_score, MatchScore};
use super::{CandidateObservation, FusionError};
use crate::config::FusionConfig;
use crate::scene::{DsmMap, Fragment, ObjectId, SceneObject, SemanticCaption};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchRecord {
    pub candidate: usize,
    pub object: ObjectId,
    pub score: MatchScore,
}

/// What happened to each candidate of one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationReport {
    pub frame_id: u64,
    pub matches: Vec<MatchRecord>,
    /// `(candidate index, new object id)`.
    pub new_objects: Vec<(usize, ObjectId)>,
}

impl AssociationReport {
    /// Object each candidate ended up in, by candidate index.
    pub fn assignment(&self, n_candidates: usize) -> Vec<Option<ObjectId>> {
        let mut out = vec![None; n_candidates];
        for m in &self.matches {
            out[m.candidate] = Some(m.object);
        }
        for (c, id) in &self.new_objects {
            out[*c] = Some(*id);
        }
        out
    }
}

fn fragment_of(cand: &CandidateObservation, first_index: usize, caption: SemanticCaption) -> Fragment {
    Fragment {
        frame_id: cand.frame_id,
        viewpoint: cand.viewpoint,
        point_indices: (first_index as u32..(first_index + cand.fragment.len()) as u32).collect(),
        observed: cand.fragment.len() as u32,
        caption,
        relations: cand.caption.relations.clone(),
    }
}

fn caption_of(cand: &CandidateObservation) -> SemanticCaption {
    let mut c = cand.caption.caption.clone();
    if c.name.trim().is_empty() {
        c.name = cand.label.clone();
    }
    c
}

/// Scores every (object, candidate) pair, accepts matched pairs greedily by
/// descending total score with each side used at most once, merges accepted
/// candidates into their objects and opens new objects for the rest.
/// Finalized objects take no part.
pub fn associate_frame(
    map: &mut DsmMap,
    frame_id: u64,
    candidates: &[CandidateObservation],
    cfg: &FusionConfig,
) -> Result<AssociationReport, FusionError> {
    if let Some(i) = candidates.iter().position(|c| c.fragment.is_empty()) {
        return Err(FusionError::EmptyCandidate(i));
    }
    let mut pairs = Vec::new();
    for obj in map.objects.values().filter(|o| !o.finalized) {
        for (ci, cand) in candidates.iter().enumerate() {
            let s = match_score(obj, cand, cfg)?;
            if s.matched {
                pairs.push((obj.id, ci, s));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.2.total
            .total_cmp(&a.2.total)
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });

    let mut used_obj = std::collections::BTreeSet::new();
    let mut used_cand = vec![false; candidates.len()];
    let mut report = AssociationReport {
        frame_id,
        matches: Vec::new(),
        new_objects: Vec::new(),
    };
    for (oid, ci, score) in pairs {
        if used_cand[ci] || used_obj.contains(&oid) {
            continue;
        }
        used_cand[ci] = true;
        used_obj.insert(oid);
        let cand = &candidates[ci];
        let obj = map.objects.get_mut(&oid).expect("scored object exists");
        let count = obj.fragments.len().max(1);
        obj.f_v = obj.f_v.running_mean(count, &cand.f_v)?;
        obj.f_s = obj.f_s.running_mean(count, &cand.f_s)?;
        let frag = fragment_of(cand, obj.cloud.len(), caption_of(cand));
        obj.cloud.extend_from(&cand.fragment);
        obj.fragments.push(frag);
        obj.refresh_bbox();
        report.matches.push(MatchRecord {
            candidate: ci,
            object: oid,
            score,
        });
    }
    report.matches.sort_by_key(|m| m.candidate);

    for (ci, cand) in candidates.iter().enumerate() {
        if used_cand[ci] {
            continue;
        }
        let id = map.next_id();
        let caption = caption_of(cand);
        let mut obj = SceneObject::new(
            id,
            caption.clone(),
            cand.fragment.clone(),
            cand.f_v.clone(),
            cand.f_s.clone(),
        )?;
        obj.fragments.push(fragment_of(cand, 0, caption));
        map.objects.insert(id, obj);
        report.new_objects.push((ci, id));
    }
    map.refresh_scene_center();
    Ok(report)
}
