//! Query grounding over a finished map: parsing, fuzzy candidate extraction,
//! relation filtering, multi-level rendering and the final choice.

mod camera;
mod candidates;
mod fuzzy;
mod ground;
mod query;
mod reasoner;
mod relations;
mod render;

use thiserror::Error;

pub use crate::config::GroundingConfig;
pub use camera::{camera_on_line, place_camera, placement_direction, Level, RenderSpec, PLACE_RADIUS};
pub use candidates::{extract_candidates, Candidates};
pub use fuzzy::{fuzzy_match, fuzzy_score, FUZZY_THRESHOLD};
pub use ground::{caption_text, ground, GroundingOutcome, GroundingResult};
pub use query::{parse_query_rules, GroundingQuery};
pub use reasoner::{
    mock_pick_class, CandidateInfo, Choice, MockReasoner, Reasoner, RemoteReasoner,
    CHOOSE_TARGET_PROMPT_V1, MAP_LABEL_PROMPT_V1, PARSE_QUERY_PROMPT_V1, RANK_RELATIONS_PROMPT_V1,
};
pub use relations::{rank_by_overlap, relation_sentences, sentence_text, take_topk, RelationSentence, TopK};
pub use render::{all_centers_in_frame, render_level, RenderedView, BACKGROUND};

use crate::perception::PerceptionError;

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("no target object found in query '{0}'")]
    NoTarget(String),
    #[error("map has no objects")]
    EmptyMap,
    #[error("no candidate object for '{0}'")]
    NoCandidate(String),
    #[error("class list is empty")]
    EmptyClassList,
    #[error(transparent)]
    Backend(#[from] PerceptionError),
    #[error("unusable model reply: {0}")]
    Reply(String),
}

/// Relevance-ranked sentences cut to `k`, with the objects they mention.
pub fn filter_topk(
    sentences: &[RelationSentence],
    q: &str,
    k: usize,
    targets: &[crate::scene::ObjectId],
    reasoner: &dyn Reasoner,
) -> Result<TopK, GroundingError> {
    let ranking = reasoner.rank_relations(q, sentences)?;
    Ok(take_topk(sentences, &ranking, k, targets))
}
