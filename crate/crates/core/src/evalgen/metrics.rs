//! Grounding accuracy and point-label segmentation metrics.
//!
//! Values are stored as fractions and serialized as percentages.

use std::collections::{BTreeMap, HashMap};

use serde::{Serialize, Serializer};

use super::querygen::{GeneratedQuery, QueryKind};
use super::EvalError;
use crate::config::{GroundingConfig, RenderConfig};
use crate::grounding::{ground, Reasoner};
use crate::scene::{aabb_iou, Aabb3, DsmMap, ObjectId, Point3, PointCloud, UNLABELED};

/// Points farther than this from every predicted point count as unlabeled.
pub const MATCH_RADIUS: f64 = 0.05;

fn percent<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(v * 100.0)
}

fn percent_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k, v * 100.0)))
}

/// Fraction of `(predicted, ground truth)` box pairs with IoU at least `threshold`.
pub fn acc_at(results: &[(Aabb3, Aabb3)], threshold: f64) -> Result<f64, EvalError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(EvalError::Threshold(threshold));
    }
    if results.is_empty() {
        return Err(EvalError::NoResults);
    }
    let hits = results.iter().filter(|(p, g)| aabb_iou(p, g) >= threshold).count();
    Ok(hits as f64 / results.len() as f64)
}

fn acc_of_ious(ious: &[f64], threshold: f64) -> f64 {
    if ious.is_empty() {
        return 0.0;
    }
    ious.iter().filter(|&&v| v >= threshold).count() as f64 / ious.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct KindStats {
    pub count: usize,
    #[serde(serialize_with = "percent")]
    pub acc_at_025: f64,
    #[serde(serialize_with = "percent")]
    pub acc_at_05: f64,
}

impl KindStats {
    fn from_ious(ious: &[f64]) -> Self {
        Self {
            count: ious.len(),
            acc_at_025: acc_of_ious(ious, 0.25),
            acc_at_05: acc_of_ious(ious, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutcome {
    pub text: String,
    pub kind: QueryKind,
    pub gt_object_id: ObjectId,
    pub predicted_object_id: Option<ObjectId>,
    pub iou: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fallbacks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundReport {
    pub unique: KindStats,
    pub multiple: KindStats,
    pub overall: KindStats,
    pub queries: Vec<QueryOutcome>,
}

impl GroundReport {
    pub fn from_outcomes(queries: Vec<QueryOutcome>) -> Self {
        let ious = |k: Option<QueryKind>| -> Vec<f64> {
            queries
                .iter()
                .filter(|q| k.is_none_or(|k| q.kind == k))
                .map(|q| q.iou)
                .collect()
        };
        Self {
            unique: KindStats::from_ious(&ious(Some(QueryKind::Unique))),
            multiple: KindStats::from_ious(&ious(Some(QueryKind::Multiple))),
            overall: KindStats::from_ious(&ious(None)),
            queries,
        }
    }
}

/// Grounds every query on `map` and scores the predicted box against the
/// target's box in `gt`. A query that fails to ground scores IoU 0.
pub fn eval_grounding(
    map: &DsmMap,
    gt: &DsmMap,
    queries: &[GeneratedQuery],
    cfg: &GroundingConfig,
    render: &RenderConfig,
    reasoner: &dyn Reasoner,
) -> Result<GroundReport, EvalError> {
    if queries.is_empty() {
        return Err(EvalError::NoResults);
    }
    let mut outcomes = Vec::with_capacity(queries.len());
    for q in queries {
        let gt_box = gt
            .get(q.gt_object_id)
            .ok_or_else(|| EvalError::Config(format!("query target {} is not in the ground truth", q.gt_object_id)))?
            .bbox;
        let outcome = match ground(map, &q.text, cfg, render, reasoner) {
            Ok(out) => QueryOutcome {
                text: q.text.clone(),
                kind: q.kind,
                gt_object_id: q.gt_object_id,
                predicted_object_id: Some(out.result.predicted_object_id),
                iou: aabb_iou(&out.result.predicted_bbox, &gt_box),
                error: None,
                fallbacks: out.result.fallbacks,
            },
            Err(e) => {
                log::warn!("query '{}' failed: {e}", q.text);
                QueryOutcome {
                    text: q.text.clone(),
                    kind: q.kind,
                    gt_object_id: q.gt_object_id,
                    predicted_object_id: None,
                    iou: 0.0,
                    error: Some(e.to_string()),
                    fallbacks: Vec::new(),
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(GroundReport::from_outcomes(outcomes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegReport {
    #[serde(serialize_with = "percent_map")]
    pub per_class_accuracy: BTreeMap<String, f64>,
    #[serde(rename = "mAcc", serialize_with = "percent")]
    pub m_acc: f64,
    #[serde(rename = "F_mIoU", serialize_with = "percent")]
    pub f_miou: f64,
    pub gt_points: usize,
    pub matched_points: usize,
}

/// Uniform-grid nearest-neighbor lookup with cells of the match radius.
struct Grid {
    cell: f64,
    cells: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl Grid {
    fn new(cloud: &PointCloud, cell: f64) -> Self {
        let mut cells: HashMap<_, Vec<u32>> = HashMap::new();
        for (i, p) in cloud.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        Self { cell, cells }
    }

    fn key(p: Point3, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    }

    /// Nearest point within `cell` of `p`; ties go to the lower index.
    fn nearest(&self, cloud: &PointCloud, p: Point3) -> Option<u32> {
        let (kx, ky, kz) = Self::key(p, self.cell);
        let mut best: Option<(f64, u32)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(idx) = self.cells.get(&(kx + dx, ky + dy, kz + dz)) else {
                        continue;
                    };
                    for &i in idx {
                        let d = cloud.point(i as usize).distance_squared(&p);
                        if d <= self.cell * self.cell && best.is_none_or(|b| (d, i) < b) {
                            best = Some((d, i));
                        }
                    }
                }
            }
        }
        best.map(|b| b.1)
    }
}

/// Transfers predicted labels to ground-truth points by nearest neighbor
/// within [`MATCH_RADIUS`] and scores them. Labels index into `classes`;
/// `UNLABELED` ground-truth points are ignored. Per-class accuracy and IoU
/// are over the classes present in the ground truth; F-mIoU weights each
/// class IoU by its share of labeled ground-truth points.
pub fn seg_metrics(pred: &PointCloud, gt: &PointCloud, classes: &[String]) -> Result<SegReport, EvalError> {
    let gt_labels = gt.labels().ok_or(EvalError::Unlabeled("ground truth"))?;
    let empty: [u32; 0] = [];
    let pred_labels = if pred.is_empty() {
        &empty[..]
    } else {
        pred.labels().ok_or(EvalError::Unlabeled("prediction"))?
    };
    let grid = Grid::new(pred, MATCH_RADIUS);
    let mut truth = Vec::new();
    let mut guess = Vec::new();
    for (i, p) in gt.iter().enumerate() {
        if gt_labels[i] == UNLABELED {
            continue;
        }
        truth.push(gt_labels[i]);
        guess.push(grid.nearest(pred, p).map_or(UNLABELED, |j| pred_labels[j as usize]));
    }
    if truth.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let n = truth.len() as f64;
    let mut gt_count: BTreeMap<u32, usize> = BTreeMap::new();
    let mut tp: BTreeMap<u32, usize> = BTreeMap::new();
    let mut fp: BTreeMap<u32, usize> = BTreeMap::new();
    for (&t, &g) in truth.iter().zip(&guess) {
        *gt_count.entry(t).or_default() += 1;
        if t == g {
            *tp.entry(t).or_default() += 1;
        } else if g != UNLABELED {
            *fp.entry(g).or_default() += 1;
        }
    }
    let name = |c: u32| classes.get(c as usize).cloned().unwrap_or_else(|| format!("class_{c}"));
    let mut per_class = BTreeMap::new();
    let mut f_miou = 0.0;
    for (&c, &count) in &gt_count {
        let t = tp.get(&c).copied().unwrap_or(0);
        let f = fp.get(&c).copied().unwrap_or(0);
        per_class.insert(name(c), t as f64 / count as f64);
        // FN = count - t, so TP + FP + FN = count + f.
        let iou = t as f64 / (count + f) as f64;
        f_miou += count as f64 / n * iou;
    }
    let m_acc = per_class.values().sum::<f64>() / per_class.len() as f64;
    Ok(SegReport {
        per_class_accuracy: per_class,
        m_acc,
        f_miou,
        gt_points: truth.len(),
        matched_points: guess.iter().filter(|g| **g != UNLABELED).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_box_at(x: f64) -> Aabb3 {
        Aabb3::from_corners(Point3::new(x, 0.0, 0.0), Point3::new(x + 1.0, 1.0, 1.0))
    }

    #[test]
    fn acc_threshold_semantics() {
        let same = unit_box_at(0.0);
        assert_eq!(acc_at(&[(same, same)], 0.25).unwrap(), 1.0);
        assert_eq!(acc_at(&[(same, same)], 0.5).unwrap(), 1.0);
        // Shift so that IoU = 0.3: overlap o, o / (2 - o) = 0.3 => o = 6/13.
        let shifted = unit_box_at(1.0 - 6.0 / 13.0);
        assert!((aabb_iou(&same, &shifted) - 0.3).abs() < 1e-12);
        assert_eq!(acc_at(&[(shifted, same)], 0.25).unwrap(), 1.0);
        assert_eq!(acc_at(&[(shifted, same)], 0.5).unwrap(), 0.0);
        let far = unit_box_at(5.0);
        let batch = [(same, same), (shifted, same), (far, same)];
        assert!((acc_at(&batch, 0.25).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((acc_at(&batch, 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(acc_at(&[], 0.5), Err(EvalError::NoResults)));
        assert!(matches!(acc_at(&batch, 0.0), Err(EvalError::Threshold(_))));
    }

    proptest! {
        #[test]
        fn acc_non_increasing_in_threshold(shifts in prop::collection::vec(0.0f64..1.5, 1..20), t1 in 0.01f64..1.0, t2 in 0.01f64..1.0) {
            let g = unit_box_at(0.0);
            let pairs: Vec<_> = shifts.iter().map(|s| (unit_box_at(*s), g)).collect();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(acc_at(&pairs, lo).unwrap() >= acc_at(&pairs, hi).unwrap());
        }
    }

    fn labeled(points: &[(f64, u32)]) -> PointCloud {
        let pts = points.iter().map(|(x, _)| [*x as f32, 0.0, 0.0]).collect();
        let labels = points.iter().map(|(_, l)| *l).collect();
        PointCloud::from_parts(pts, None, Some(labels)).unwrap()
    }

    fn classes() -> Vec<String> {
        ["chair", "table", "lamp"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn identical_clouds_score_one() {
        let gt = labeled(&[(0.0, 0), (1.0, 1), (2.0, 2), (3.0, 2)]);
        let r = seg_metrics(&gt, &gt, &classes()).unwrap();
        assert_eq!(r.m_acc, 1.0);
        assert_eq!(r.f_miou, 1.0);
    }

    #[test]
    fn one_class_fully_wrong() {
        let gt = labeled(&[(0.0, 0), (1.0, 0), (2.0, 1), (3.0, 1)]);
        let pred = labeled(&[(0.0, 0), (1.0, 0), (2.0, 0), (3.0, 0)]);
        let r = seg_metrics(&pred, &gt, &classes()).unwrap();
        assert_eq!(r.m_acc, 0.5);
    }

    #[test]
    fn hand_computed_confusion() {
        // Rows: ground truth; one point per meter along x.
        //   chair (4): predicted chair, chair, chair, table
        //   table (3): predicted table, table, lamp
        //   lamp  (3): predicted lamp, <no match>, chair
        let gt = labeled(&[
            (0.0, 0), (1.0, 0), (2.0, 0), (3.0, 0),
            (4.0, 1), (5.0, 1), (6.0, 1),
            (7.0, 2), (8.0, 2), (9.0, 2),
        ]);
        let pred = labeled(&[
            (0.0, 0), (1.0, 0), (2.0, 0), (3.0, 1),
            (4.0, 1), (5.0, 1), (6.0, 2),
            (7.0, 2), (8.3, 2), (9.0, 0),
        ]);
        let r = seg_metrics(&pred, &gt, &classes()).unwrap();
        // Accuracies 3/4, 2/3, 1/3.
        let m_acc = (0.75 + 2.0 / 3.0 + 1.0 / 3.0) / 3.0;
        // IoU: chair 3/(3+1+1), table 2/(2+1+1), lamp 1/(1+2+1); weights 0.4, 0.3, 0.3.
        let f_miou = 0.4 * 0.6 + 0.3 * 0.5 + 0.3 * 0.25;
        assert!((r.m_acc - m_acc).abs() < 1e-9, "{}", r.m_acc);
        assert!((r.f_miou - f_miou).abs() < 1e-9, "{}", r.f_miou);
        assert_eq!(r.gt_points, 10);
        assert_eq!(r.matched_points, 9);
        assert!((r.per_class_accuracy["table"] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_point_decides_within_radius() {
        let gt = labeled(&[(0.0, 0)]);
        let pred = labeled(&[(0.03, 1), (0.01, 0), (0.049, 2)]);
        assert_eq!(seg_metrics(&pred, &gt, &classes()).unwrap().m_acc, 1.0);
        let pred = labeled(&[(0.051, 0)]);
        assert_eq!(seg_metrics(&pred, &gt, &classes()).unwrap().matched_points, 0);
    }

    #[test]
    fn seg_errors() {
        let gt = labeled(&[(0.0, UNLABELED)]);
        assert!(matches!(seg_metrics(&gt, &gt, &classes()), Err(EvalError::EmptyGroundTruth)));
        let bare = PointCloud::from_points([Point3::ORIGIN]);
        assert!(matches!(seg_metrics(&bare, &bare, &classes()), Err(EvalError::Unlabeled(_))));
    }

    #[test]
    fn reports_serialize_as_percent() {
        let gt = labeled(&[(0.0, 0), (1.0, 1)]);
        let pred = labeled(&[(0.0, 0), (1.0, 0)]);
        let r = seg_metrics(&pred, &gt, &classes()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["mAcc"], 50.0);
        assert!(v["F_mIoU"].is_number());
        assert_eq!(v["per_class_accuracy"]["chair"], 100.0);
        let g = GroundReport::from_outcomes(vec![QueryOutcome {
            text: "the cup".into(),
            kind: QueryKind::Unique,
            gt_object_id: ObjectId(0),
            predicted_object_id: Some(ObjectId(0)),
            iou: 0.3,
            error: None,
            fallbacks: vec![],
        }]);
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["overall"]["acc_at_025"], 100.0);
        assert_eq!(v["overall"]["acc_at_05"], 0.0);
        assert_eq!(v["multiple"]["count"], 0);
    }
}
