use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::scene::{DsmMap, ObjectId};
use crate::text::overlap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSentence {
    pub subject_id: ObjectId,
    pub anchor_id: ObjectId,
    pub text: String,
}

pub fn sentence_text(subject: &str, anchor: &str, spatial: &str, semantic: &str) -> String {
    format!("Between {subject} and {anchor}, the spatial relation is {spatial} and the semantic relation is {semantic}")
}

/// One sentence per stored relation from a target to an anchor or another target.
pub fn relation_sentences(targets: &[ObjectId], anchors: &[ObjectId], map: &DsmMap) -> Vec<RelationSentence> {
    let t: BTreeSet<_> = targets.iter().copied().collect();
    let ends: BTreeSet<_> = anchors.iter().chain(targets).copied().collect();
    map.relations
        .iter()
        .filter(|r| t.contains(&r.subject_id) && ends.contains(&r.anchor_id))
        .map(|r| RelationSentence {
            subject_id: r.subject_id,
            anchor_id: r.anchor_id,
            text: sentence_text(
                map.objects[&r.subject_id].name(),
                map.objects[&r.anchor_id].name(),
                r.r_g_descriptor.phrase(),
                &r.r_s,
            ),
        })
        .collect()
}

/// Ranks sentences by content-token overlap with the query, ties by
/// `(subject_id, anchor_id)`. Returns indices into `sentences`.
pub fn rank_by_overlap(query: &str, sentences: &[RelationSentence]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sentences.len()).collect();
    let scores: Vec<usize> = sentences.iter().map(|s| overlap(query, &s.text)).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .cmp(&scores[a])
            .then((sentences[a].subject_id, sentences[a].anchor_id).cmp(&(sentences[b].subject_id, sentences[b].anchor_id)))
    });
    idx
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopK {
    pub sentences: Vec<RelationSentence>,
    /// Objects named by the kept sentences, or the targets when there were none.
    pub objects: Vec<ObjectId>,
}

/// Keeps the first `k` sentences of `ranking`.
pub fn take_topk(sentences: &[RelationSentence], ranking: &[usize], k: usize, targets: &[ObjectId]) -> TopK {
    let kept: Vec<RelationSentence> = ranking.iter().take(k).map(|&i| sentences[i].clone()).collect();
    if kept.is_empty() {
        return TopK {
            sentences: kept,
            objects: targets.to_vec(),
        };
    }
    let mut objects = Vec::new();
    for s in &kept {
        for id in [s.subject_id, s.anchor_id] {
            if !objects.contains(&id) {
                objects.push(id);
            }
        }
    }
    TopK {
        sentences: kept,
        objects,
    }
}
