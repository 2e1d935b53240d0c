use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::query::{parse_query_rules, GroundingQuery};
use super::relations::{rank_by_overlap, RelationSentence};
use super::render::RenderedView;
use super::GroundingError;
use crate::perception::{ChatClient, ChatMessage, ChatRequest};
use crate::scene::ObjectId;
use crate::text::overlap;

pub const PARSE_QUERY_PROMPT_V1: &str = include_str!("../../assets/parse_query_v1.txt");
pub const RANK_RELATIONS_PROMPT_V1: &str = include_str!("../../assets/rank_relations_v1.txt");
pub const CHOOSE_TARGET_PROMPT_V1: &str = include_str!("../../assets/choose_target_v1.txt");
pub const MAP_LABEL_PROMPT_V1: &str = include_str!("../../assets/map_label_v1.txt");

/// A candidate as presented to the final chooser.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateInfo {
    pub id: ObjectId,
    /// Caption text followed by the candidate's kept relation sentences.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Choice {
    pub object: ObjectId,
    pub raw: String,
}

/// The language-side decisions of grounding and evaluation.
pub trait Reasoner: Send + Sync {
    fn parse_query(&self, q: &str) -> Result<GroundingQuery, GroundingError>;

    /// Indices of `sentences`, most relevant to `q` first.
    fn rank_relations(&self, q: &str, sentences: &[RelationSentence]) -> Result<Vec<usize>, GroundingError>;

    fn choose_target(
        &self,
        q: &str,
        views: &[RenderedView],
        candidates: &[CandidateInfo],
    ) -> Result<Choice, GroundingError>;

    /// Picks the entry of `classes` that best fits the description `sentence`.
    fn pick_class(&self, sentence: &str, classes: &[String]) -> Result<String, GroundingError>;
}

/// Deterministic text-overlap stand-in for a language model.
#[derive(Debug, Clone, Default)]
pub struct MockReasoner;

impl Reasoner for MockReasoner {
    fn parse_query(&self, q: &str) -> Result<GroundingQuery, GroundingError> {
        parse_query_rules(q)
    }

    fn rank_relations(&self, q: &str, sentences: &[RelationSentence]) -> Result<Vec<usize>, GroundingError> {
        Ok(rank_by_overlap(q, sentences))
    }

    fn choose_target(
        &self,
        q: &str,
        _views: &[RenderedView],
        candidates: &[CandidateInfo],
    ) -> Result<Choice, GroundingError> {
        let best = candidates
            .iter()
            .map(|c| (overlap(q, &c.text), c.id))
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .ok_or_else(|| GroundingError::Reply("no candidates to choose from".into()))?;
        Ok(Choice {
            object: best.1,
            raw: format!("{{\"id\": {}, \"overlap\": {}}}", best.1, best.0),
        })
    }

    fn pick_class(&self, sentence: &str, classes: &[String]) -> Result<String, GroundingError> {
        mock_pick_class(sentence, classes)
    }
}

/// Class with the highest token overlap with `sentence`, alphabetical on ties.
pub fn mock_pick_class(sentence: &str, classes: &[String]) -> Result<String, GroundingError> {
    classes
        .iter()
        .map(|c| (overlap(sentence, c), c))
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(a.1)))
        .map(|(_, c)| c.clone())
        .ok_or(GroundingError::EmptyClassList)
}

/// Reasoner backed by a chat-completion endpoint. Every call retries once on
/// an unusable reply.
pub struct RemoteReasoner {
    client: ChatClient,
}

impl RemoteReasoner {
    pub fn new(client: ChatClient) -> Self {
        Self { client }
    }

    fn ask<T: DeserializeOwned>(
        &self,
        system: &str,
        user: ChatMessage,
        check: impl Fn(&T) -> Result<(), String>,
    ) -> Result<(T, String), GroundingError> {
        let req = ChatRequest::new(
            self.client.config().model.clone(),
            vec![ChatMessage::system(system), user],
            400,
        );
        let mut last = String::new();
        for _ in 0..2 {
            let reply = self.client.chat_complete(&req)?;
            match parse_json::<T>(&reply.text).and_then(|v| check(&v).map(|_| v)) {
                Ok(v) => return Ok((v, reply.text)),
                Err(e) => {
                    log::warn!("unusable reply ({e}): {}", reply.text);
                    last = e;
                }
            }
        }
        Err(GroundingError::Reply(last))
    }
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let mut body = text.trim();
    if let Some(rest) = body.strip_prefix("```") {
        body = rest.trim_start_matches("json").trim_end().trim_end_matches("```").trim();
    }
    serde_json::from_str(body).map_err(|e| e.to_string())
}

#[derive(Deserialize)]
struct ParseReply {
    target: String,
    #[serde(default)]
    anchors: Vec<String>,
}

#[derive(Deserialize)]
struct RankReply {
    ranking: Vec<usize>,
}

#[derive(Deserialize)]
struct ChoiceReply {
    id: u32,
}

#[derive(Deserialize)]
struct ClassReply {
    class: String,
}

impl Reasoner for RemoteReasoner {
    fn parse_query(&self, q: &str) -> Result<GroundingQuery, GroundingError> {
        if q.trim().is_empty() {
            return Err(GroundingError::EmptyQuery);
        }
        let (r, _) = self.ask::<ParseReply>(PARSE_QUERY_PROMPT_V1, ChatMessage::user(format!("Request: {q}")), |r| {
            if r.target.trim().is_empty() {
                Err("empty target".into())
            } else {
                Ok(())
            }
        })?;
        Ok(GroundingQuery {
            raw: q.to_string(),
            target_phrase: r.target.trim().to_string(),
            anchor_phrases: r.anchors.into_iter().filter(|a| !a.trim().is_empty()).collect(),
        })
    }

    fn rank_relations(&self, q: &str, sentences: &[RelationSentence]) -> Result<Vec<usize>, GroundingError> {
        if sentences.is_empty() {
            return Ok(Vec::new());
        }
        let mut text = format!("Request: {q}\nSentences:\n");
        for (i, s) in sentences.iter().enumerate() {
            text.push_str(&format!("{}. {}\n", i + 1, s.text));
        }
        let n = sentences.len();
        let (r, _) = self.ask::<RankReply>(RANK_RELATIONS_PROMPT_V1, ChatMessage::user(text), |r| {
            let mut seen = vec![false; n];
            for &i in &r.ranking {
                if i == 0 || i > n || seen[i - 1] {
                    return Err(format!("bad sentence number {i}"));
                }
                seen[i - 1] = true;
            }
            Ok(())
        })?;
        // Sentences the model left out keep their relative order at the end.
        let mut order: Vec<usize> = r.ranking.iter().map(|i| i - 1).collect();
        let missing: Vec<usize> = (0..n).filter(|i| !order.contains(i)).collect();
        order.extend(missing);
        Ok(order)
    }

    fn choose_target(
        &self,
        q: &str,
        views: &[RenderedView],
        candidates: &[CandidateInfo],
    ) -> Result<Choice, GroundingError> {
        let mut text = format!("Request: {q}\nCandidates:\n");
        for c in candidates {
            text.push_str(&format!("[{}] {}\n", c.id, c.text));
        }
        let mut msg = ChatMessage::user(text);
        for v in views {
            msg = msg.with_image_png(base64::engine::general_purpose::STANDARD.encode(v.image.encode_png()));
        }
        let ids: Vec<u32> = candidates.iter().map(|c| c.id.0).collect();
        let (r, raw) = self.ask::<ChoiceReply>(CHOOSE_TARGET_PROMPT_V1, msg, |r| {
            if ids.contains(&r.id) {
                Ok(())
            } else {
                Err(format!("id {} is not a candidate", r.id))
            }
        })?;
        Ok(Choice {
            object: ObjectId(r.id),
            raw,
        })
    }

    fn pick_class(&self, sentence: &str, classes: &[String]) -> Result<String, GroundingError> {
        if classes.is_empty() {
            return Err(GroundingError::EmptyClassList);
        }
        let text = format!("Object: {sentence}\nCategories: {}", classes.join(", "));
        let (r, _) = self.ask::<ClassReply>(MAP_LABEL_PROMPT_V1, ChatMessage::user(text), |r| {
            if classes.contains(&r.class) {
                Ok(())
            } else {
                Err(format!("'{}' is not in the class list", r.class))
            }
        })?;
        Ok(r.class)
    }
}
