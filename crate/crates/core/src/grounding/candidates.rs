use serde::Serialize;

use super::fuzzy::fuzzy_match;
use super::query::GroundingQuery;
use super::GroundingError;
use crate::scene::{DsmMap, ObjectId};
use crate::text::content_tokens;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Candidates {
    /// Possible targets, best fuzzy score first.
    pub targets: Vec<ObjectId>,
    /// Objects matching any anchor phrase.
    pub anchors: Vec<ObjectId>,
    /// Targets came from the token-overlap fallback rather than the name match.
    pub fallback: bool,
}

/// Fuzzy-matches the target and anchor phrases against object names. With no
/// name match, every object whose caption shares a content token with the
/// query becomes a target.
pub fn extract_candidates(q: &GroundingQuery, map: &DsmMap) -> Result<Candidates, GroundingError> {
    if map.is_empty() {
        return Err(GroundingError::EmptyMap);
    }
    let mut targets: Vec<ObjectId> = fuzzy_match(&q.target_phrase, map).into_iter().map(|(id, _)| id).collect();
    let mut fallback = false;
    if targets.is_empty() {
        fallback = true;
        let qt = content_tokens(&q.raw);
        targets = map
            .objects
            .values()
            .filter(|o| {
                let ct = content_tokens(&o.caption.embedding_text());
                ct.iter().any(|t| qt.contains(t))
            })
            .map(|o| o.id)
            .collect();
    }
    if targets.is_empty() {
        return Err(GroundingError::NoCandidate(q.target_phrase.clone()));
    }
    let mut anchors = Vec::new();
    for a in &q.anchor_phrases {
        for (id, _) in fuzzy_match(a, map) {
            if !anchors.contains(&id) {
                anchors.push(id);
            }
        }
    }
    Ok(Candidates {
        targets,
        anchors,
        fallback,
    })
}
