use crate::scene::{DsmMap, ObjectId};
use crate::text::{canonicalize, jaccard, token_set};

/// Minimum score for a phrase to match an object name.
pub const FUZZY_THRESHOLD: f64 = 0.34;

/// Similarity between a phrase and an object name: the larger of token-set
/// Jaccard and a substring score (length of the shorter string over the longer
/// when one contains the other).
pub fn fuzzy_score(phrase: &str, name: &str) -> f64 {
    let (p, n) = (canonicalize(phrase), canonicalize(name));
    if p.is_empty() || n.is_empty() {
        return 0.0;
    }
    if p == n {
        return 1.0;
    }
    let j = jaccard(&token_set(&p), &token_set(&n));
    let (short, long) = if p.len() <= n.len() { (&p, &n) } else { (&n, &p) };
    let sub = if long.contains(short.as_str()) {
        short.len() as f64 / long.len() as f64
    } else {
        0.0
    };
    j.max(sub)
}

/// Objects whose name scores at least [`FUZZY_THRESHOLD`] against `phrase`,
/// best first, ties by id.
pub fn fuzzy_match(phrase: &str, map: &DsmMap) -> Vec<(ObjectId, f64)> {
    let mut out: Vec<(ObjectId, f64)> = map
        .objects
        .values()
        .map(|o| (o.id, fuzzy_score(phrase, o.name())))
        .filter(|(_, s)| *s >= FUZZY_THRESHOLD)
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    out
}
