//! Mapping open-vocabulary captions onto a closed class list.

use serde::Serialize;

use super::EvalError;
use crate::grounding::{mock_pick_class, GroundingError, Reasoner};
use crate::scene::{DsmMap, PointCloud, SemanticCaption, UNLABELED};

/// Description of an object offered to the class picker.
pub fn label_sentence(c: &SemanticCaption) -> String {
    format!(
        "This is {}, its appearance attributes include {}, its physical attributes are {}, and its affordance attributes are {}.",
        c.name, c.appearance, c.physical, c.affordance
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LabelAssignment {
    pub class: String,
    pub class_index: u32,
    /// The backend failed and the overlap rule chose instead.
    pub fallback: bool,
}

/// Picks one class per caption. Backend failures fall back to the overlap
/// rule and are flagged.
pub fn map_labels(
    captions: &[SemanticCaption],
    classes: &[String],
    reasoner: &dyn Reasoner,
) -> Result<Vec<LabelAssignment>, EvalError> {
    if classes.is_empty() {
        return Err(EvalError::Grounding(GroundingError::EmptyClassList));
    }
    captions
        .iter()
        .map(|c| {
            let sentence = label_sentence(c);
            let (class, fallback) = match reasoner.pick_class(&sentence, classes) {
                Ok(class) if classes.contains(&class) => (class, false),
                Ok(class) => {
                    log::warn!("class '{class}' is not in the list; using the overlap rule");
                    (mock_pick_class(&sentence, classes)?, true)
                }
                Err(e @ (GroundingError::Reply(_) | GroundingError::Backend(_))) => {
                    log::warn!("class mapping failed ({e}); using the overlap rule");
                    (mock_pick_class(&sentence, classes)?, true)
                }
                Err(e) => return Err(e.into()),
            };
            let class_index = classes.iter().position(|k| *k == class).expect("class is listed") as u32;
            Ok(LabelAssignment {
                class,
                class_index,
                fallback,
            })
        })
        .collect()
}

/// Sorted distinct object names of `map`.
pub fn class_list(map: &DsmMap) -> Vec<String> {
    let mut names: Vec<String> = map.objects.values().map(|o| o.name().to_string()).collect();
    names.sort();
    names.dedup();
    names
}

/// All object clouds concatenated, labeled with `labels` in object order.
pub fn labeled_cloud(map: &DsmMap, labels: &[u32]) -> PointCloud {
    let mut out = PointCloud::new();
    for (obj, label) in map.objects.values().zip(labels) {
        let mut c = PointCloud::from_parts(obj.cloud.raw_points().to_vec(), None, None).expect("no optional columns");
        c.set_uniform_label(*label);
        out.extend_from(&c);
    }
    out
}

/// Ground-truth cloud labeled by exact name lookup in `classes`.
pub fn gt_labeled_cloud(gt: &DsmMap, classes: &[String]) -> PointCloud {
    let labels: Vec<u32> = gt
        .objects
        .values()
        .map(|o| classes.iter().position(|c| c == o.name()).map_or(UNLABELED, |i| i as u32))
        .collect();
    labeled_cloud(gt, &labels)
}
