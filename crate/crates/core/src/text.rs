//! Tokenization helpers shared by the mock backends, fuzzy matching and query tooling.

use std::collections::BTreeSet;

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "of", "to", "in", "on", "at", "by", "for", "with", "is", "are",
    "it", "its", "that", "this", "which", "as", "be", "from", "into", "while", "when", "can",
    "find", "me", "please", "get", "show", "where", "help", "between", "relation", "spatial",
    "semantic", "m",
];

/// Lowercases and collapses runs of whitespace to single spaces.
pub fn canonicalize(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercase alphanumeric tokens, in order.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokens(text).into_iter().collect()
}

/// Token set with stopwords and pure numbers removed.
pub fn content_tokens(text: &str) -> BTreeSet<String> {
    tokens(text)
        .into_iter()
        .filter(|t| !STOPWORDS.contains(&t.as_str()) && !t.chars().all(|c| c.is_ascii_digit()))
        .collect()
}

/// Number of content tokens shared by two texts.
pub fn overlap(a: &str, b: &str) -> usize {
    let ta = content_tokens(a);
    content_tokens(b).iter().filter(|t| ta.contains(*t)).count()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.union(b).count();
    inter as f64 / union as f64
}

/// 64-bit FNV-1a, used to derive stable seeds from strings.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
