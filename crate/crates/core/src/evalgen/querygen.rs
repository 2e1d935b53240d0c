//! Referring-expression generation with randomly gated attribute text.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::config::{Gate, QueryGenConfig};
use crate::scene::{DsmMap, ObjectId, SceneObject};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Unique,
    Multiple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Attribute {
    #[serde(rename = "a_a")]
    Appearance,
    #[serde(rename = "a_p")]
    Physical,
    #[serde(rename = "a_o")]
    Affordance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuery {
    pub text: String,
    pub gt_object_id: ObjectId,
    pub kind: QueryKind,
    pub included_attrs: Vec<Attribute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_id: Option<ObjectId>,
    /// Spatial phrase of the relation used, verbatim from the map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
}

fn gate_sampler(g: Gate) -> Result<Normal<f64>, EvalError> {
    Normal::new(g.mu, g.sigma).map_err(|e| EvalError::Config(format!("gate {g:?}: {e}")))
}

/// Number of objects carrying each name.
pub fn name_counts(map: &DsmMap) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for o in map.objects.values() {
        *counts.entry(o.name()).or_insert(0) += 1;
    }
    counts
}

/// Generates `cfg.n_unique` unique-kind and `cfg.n_multiple` multiple-kind
/// queries. Each query names a random target, adds each attribute text whose
/// gate draw exceeds `cfg.gate_cutoff`, and appends one of the target's
/// relations when it has any. Multiple-kind targets must have a relation; if
/// none do, that part is skipped with a warning.
pub fn generate_queries(map: &DsmMap, cfg: &QueryGenConfig) -> Result<Vec<GeneratedQuery>, EvalError> {
    if map.is_empty() {
        return Err(EvalError::EmptyMap);
    }
    cfg.validate().map_err(|e| EvalError::Config(e.to_string()))?;
    let gates = [
        (Attribute::Appearance, gate_sampler(cfg.appearance)?),
        (Attribute::Physical, gate_sampler(cfg.physical)?),
        (Attribute::Affordance, gate_sampler(cfg.affordance)?),
    ];
    let counts = name_counts(map);
    let has_relation = |o: &SceneObject| map.relations.iter().any(|r| r.subject_id == o.id);
    let unique: Vec<&SceneObject> = map.objects.values().filter(|o| counts[o.name()] == 1).collect();
    let multiple: Vec<&SceneObject> = map
        .objects
        .values()
        .filter(|o| counts[o.name()] > 1 && has_relation(o))
        .collect();
    if cfg.n_unique > 0 && unique.is_empty() {
        log::warn!("no uniquely named objects; skipping {} unique queries", cfg.n_unique);
    }
    if cfg.n_multiple > 0 && multiple.is_empty() {
        log::warn!(
            "no repeated-name object has a relation; skipping {} multiple queries",
            cfg.n_multiple
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_unique + cfg.n_multiple);
    for (kind, pool, n) in [
        (QueryKind::Unique, &unique, cfg.n_unique),
        (QueryKind::Multiple, &multiple, cfg.n_multiple),
    ] {
        if pool.is_empty() {
            continue;
        }
        for _ in 0..n {
            let target = *pool.choose(&mut rng).expect("pool is non-empty");
            let mut text = format!("the {}", target.name());
            let mut included = Vec::new();
            for (attr, gate) in &gates {
                // Draw every gate so the stream does not depend on which texts are empty.
                let g = gate.sample(&mut rng);
                let s = match attr {
                    Attribute::Appearance => &target.caption.appearance,
                    Attribute::Physical => &target.caption.physical,
                    Attribute::Affordance => &target.caption.affordance,
                };
                if g > cfg.gate_cutoff && !s.trim().is_empty() {
                    text.push_str(", ");
                    text.push_str(s.trim());
                    included.push(*attr);
                }
            }
            let related: Vec<_> = map.relations.iter().filter(|r| r.subject_id == target.id).collect();
            let (mut anchor_id, mut relation) = (None, None);
            if let Some(r) = related.choose(&mut rng) {
                let phrase = r.r_g_descriptor.phrase();
                text.push_str(&format!(" that is {phrase} the {}", map.objects[&r.anchor_id].name()));
                anchor_id = Some(r.anchor_id);
                relation = Some(phrase.to_string());
            }
            out.push(GeneratedQuery {
                text,
                gt_object_id: target.id,
                kind,
                included_attrs: included,
                anchor_id,
                relation,
            });
        }
    }
    Ok(out)
}
