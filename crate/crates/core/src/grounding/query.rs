use serde::{Deserialize, Serialize};

use super::GroundingError;
use crate::scene::SpatialDescriptor;
use crate::text::canonicalize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundingQuery {
    pub raw: String,
    pub target_phrase: String,
    pub anchor_phrases: Vec<String>,
}

const LEADING: &[&str] = &[
    "please ", "find ", "locate ", "show me ", "where is ", "get ", "pick up ", "bring me ",
    "go to ", "look for ",
];

const ARTICLES: &[&str] = &["the ", "a ", "an "];

/// Relation words that may separate a target from its anchor, besides the
/// descriptor phrases.
const EXTRA_MARKERS: &[&str] = &["next to", "on top of", "near", "beside", "under", "in", "at"];

fn markers() -> Vec<&'static str> {
    let mut m: Vec<&str> = SpatialDescriptor::ALL.iter().map(|d| d.phrase()).collect();
    m.extend_from_slice(EXTRA_MARKERS);
    // Longest first so "on top of" wins over "on".
    m.sort_by_key(|s| std::cmp::Reverse(s.len()));
    m
}

fn strip_prefixes<'a>(mut s: &'a str, prefixes: &[&str]) -> &'a str {
    loop {
        let before = s;
        for p in prefixes {
            if let Some(rest) = s.strip_prefix(p) {
                s = rest.trim_start();
            }
        }
        if s == before {
            return s;
        }
    }
}

fn noun_phrase(s: &str) -> String {
    let s = strip_prefixes(s.trim(), ARTICLES);
    let s = s.split(',').next().unwrap_or("").trim();
    if ARTICLES.iter().any(|a| a.trim() == s) {
        return String::new();
    }
    s.to_string()
}

/// Strips a leading relation phrase and article from the text after "that is".
fn anchor_after_relation(rest: &str) -> String {
    let rest = rest.trim();
    for m in markers() {
        if let Some(tail) = rest.strip_prefix(m) {
            if tail.is_empty() || tail.starts_with(' ') {
                return noun_phrase(tail);
            }
        }
    }
    match rest.find(" the ") {
        Some(i) => noun_phrase(&rest[i..]),
        None => noun_phrase(rest),
    }
}

/// Rule-based parse for queries of the form
/// `[verb] the <target>[, attributes...][ that is <relation> the <anchor>]`
/// or `the <target> <relation> the <anchor>`.
pub fn parse_query_rules(q: &str) -> Result<GroundingQuery, GroundingError> {
    let raw = q.to_string();
    let text = canonicalize(q);
    let text = text.trim_end_matches(['.', '?', '!']).trim();
    if text.is_empty() {
        return Err(GroundingError::EmptyQuery);
    }
    let body = strip_prefixes(text, LEADING);
    let mut anchors = Vec::new();
    let target;
    if let Some(i) = body.rfind(" that is ") {
        target = noun_phrase(&body[..i]);
        let a = anchor_after_relation(&body[i + " that is ".len()..]);
        if !a.is_empty() {
            anchors.push(a);
        }
    } else {
        let head = body.split(',').next().unwrap_or("");
        let mut cut: Option<(usize, &str)> = None;
        for m in markers() {
            let pat = format!(" {m} ");
            if let Some(i) = head.find(&pat) {
                if cut.is_none_or(|(j, _)| i < j) {
                    cut = Some((i, m));
                }
            }
        }
        match cut {
            Some((i, m)) => {
                target = noun_phrase(&head[..i]);
                let a = noun_phrase(&head[i + m.len() + 2..]);
                if !a.is_empty() {
                    anchors.push(a);
                }
            }
            None => target = noun_phrase(body),
        }
    }
    if target.is_empty() {
        return Err(GroundingError::NoTarget(raw));
    }
    Ok(GroundingQuery {
        raw,
        target_phrase: target,
        anchor_phrases: anchors,
    })
}
