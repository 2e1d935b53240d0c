use std::collections::BTreeMap;

use crate::grounding::fuzzy_match;
use crate::scene::{aabb_contains, Aabb3, DsmMap, ObjectId, Point3, Relation, SpatialDescriptor};

/// Centroid distance under which side-by-side objects are "near".
pub const NEAR_DISTANCE: f64 = 0.75;
/// Minimum xy-footprint overlap (over the smaller footprint) for vertical descriptors.
pub const FOOTPRINT_OVERLAP: f64 = 0.25;
/// Largest vertical gap still counted as resting "on" the anchor.
pub const CONTACT_GAP: f64 = 0.05;

/// Geometric descriptor of `subject` relative to `anchor`.
///
/// Checked in order: containment, vertical stacking over a shared footprint,
/// proximity, and finally left/right/front/behind as seen from `scene_center`
/// looking at the anchor.
pub fn describe(subject: &Aabb3, anchor: &Aabb3, distance: f64, scene_center: Point3) -> SpatialDescriptor {
    if aabb_contains(subject, anchor) {
        return SpatialDescriptor::Inside;
    }
    if subject.footprint_overlap(anchor) > FOOTPRINT_OVERLAP {
        let gap = subject.min.z - anchor.max.z;
        if gap >= -CONTACT_GAP {
            return if gap <= CONTACT_GAP {
                SpatialDescriptor::On
            } else {
                SpatialDescriptor::Above
            };
        }
        if subject.max.z <= anchor.min.z + CONTACT_GAP {
            return SpatialDescriptor::Below;
        }
    }
    if distance < NEAR_DISTANCE {
        return SpatialDescriptor::Near;
    }
    let (a, s) = (anchor.center(), subject.center());
    let view = Point3::new(a.x - scene_center.x, a.y - scene_center.y, 0.0)
        .normalized()
        .unwrap_or(Point3::new(1.0, 0.0, 0.0));
    let right = Point3::new(view.y, -view.x, 0.0);
    let offset = Point3::new(s.x - a.x, s.y - a.y, 0.0);
    let (depth, lateral) = (offset.dot(&view), offset.dot(&right));
    if lateral.abs() >= depth.abs() {
        if lateral > 0.0 {
            SpatialDescriptor::RightOf
        } else {
            SpatialDescriptor::LeftOf
        }
    } else if depth > 0.0 {
        SpatialDescriptor::Behind
    } else {
        SpatialDescriptor::InFrontOf
    }
}

/// Distance between the two objects' cloud centroids.
pub fn relation_distance(map: &DsmMap, a: ObjectId, b: ObjectId) -> Option<f64> {
    let ca = map.get(a)?.cloud.centroid()?;
    let cb = map.get(b)?.cloud.centroid()?;
    Some(ca.distance(&cb))
}

/// Resolves an anchor label to an object other than `subject`: best fuzzy
/// score, then nearest to the subject, then lowest id.
pub fn resolve_anchor(map: &DsmMap, subject: ObjectId, label: &str) -> Option<ObjectId> {
    let from = map.get(subject)?.center();
    let hits: Vec<_> = fuzzy_match(label, map).into_iter().filter(|(id, _)| *id != subject).collect();
    let best = hits.first()?.1;
    hits.into_iter()
        .filter(|(_, s)| *s == best)
        .map(|(id, _)| (id, map.objects[&id].center().distance(&from)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(id, _)| id)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationUpdate {
    /// Observed relations whose anchor label matched no object.
    pub dropped: Vec<(ObjectId, String)>,
}

/// Rebuilds every relation from the relation observations stored on object
/// fragments. Geometry comes from the current boxes and centroids; the
/// semantic text of a pair comes from the observation on the fragment with
/// the most surviving points, latest frame on ties.
pub fn update_relations(map: &mut DsmMap) -> RelationUpdate {
    let center = map.scene_center.unwrap_or(Point3::ORIGIN);
    let mut best: BTreeMap<(ObjectId, ObjectId), ((usize, u64), String)> = BTreeMap::new();
    let mut update = RelationUpdate::default();
    let mut resolved: BTreeMap<(ObjectId, String), Option<ObjectId>> = BTreeMap::new();
    for obj in map.objects.values() {
        for frag in &obj.fragments {
            let weight = (frag.point_indices.len(), frag.frame_id);
            for rel in &frag.relations {
                let anchor = *resolved
                    .entry((obj.id, rel.anchor_label.clone()))
                    .or_insert_with(|| resolve_anchor(map, obj.id, &rel.anchor_label));
                let Some(anchor) = anchor else {
                    if !update.dropped.contains(&(obj.id, rel.anchor_label.clone())) {
                        update.dropped.push((obj.id, rel.anchor_label.clone()));
                    }
                    continue;
                };
                let slot = best.entry((obj.id, anchor)).or_insert((weight, rel.semantic.clone()));
                if weight >= slot.0 {
                    *slot = (weight, rel.semantic.clone());
                }
            }
        }
    }
    for (id, label) in &update.dropped {
        log::warn!("relation from object {id} to unknown anchor '{label}' dropped");
    }
    map.relations = best
        .into_iter()
        .filter_map(|((s, a), (_, r_s))| {
            let d = relation_distance(map, s, a)?;
            let descriptor = describe(&map.objects[&s].bbox, &map.objects[&a].bbox, d, center);
            Some(Relation {
                subject_id: s,
                anchor_id: a,
                r_g_distance: d,
                r_g_descriptor: descriptor,
                r_s,
            })
        })
        .collect();
    update
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;
    use crate::perception::FeatureVector;
    use crate::scene::{Fragment, ObservedRelation, PointCloud, SceneObject, SemanticCaption};

    fn bx(min: [f64; 3], max: [f64; 3]) -> Aabb3 {
        Aabb3::from_corners(min.into(), max.into())
    }

    fn d(a: &Aabb3, b: &Aabb3) -> f64 {
        a.center().distance(&b.center())
    }

    #[test]
    fn descriptor_rules() {
        let c = Point3::ORIGIN;
        let table = bx([0.0, 0.0, 0.0], [1.0, 1.0, 0.7]);
        let cup = bx([0.4, 0.4, 0.7], [0.5, 0.5, 0.8]);
        assert_eq!(describe(&cup, &table, d(&cup, &table), c), SpatialDescriptor::On);
        let lamp = bx([0.2, 0.2, 1.2], [0.6, 0.6, 1.5]);
        assert_eq!(describe(&lamp, &table, d(&lamp, &table), c), SpatialDescriptor::Above);
        assert_eq!(describe(&table, &lamp, d(&lamp, &table), c), SpatialDescriptor::Below);
        let inner = bx([0.1, 0.1, 0.1], [0.2, 0.2, 0.2]);
        assert_eq!(describe(&inner, &table, d(&inner, &table), c), SpatialDescriptor::Inside);
        // Side by side, centroids 0.4 m apart.
        let a = bx([0.0, 0.0, 0.0], [0.2, 0.2, 0.2]);
        let b = bx([0.4, 0.0, 0.0], [0.6, 0.2, 0.2]);
        assert!((d(&a, &b) - 0.4).abs() < 1e-12);
        assert_eq!(describe(&a, &b, 0.4, c), SpatialDescriptor::Near);
    }

    #[test]
    fn egocentric_descriptors() {
        // Viewer at the origin looking along +x toward the anchor at x = 3.
        let c = Point3::ORIGIN;
        let anchor = bx([2.9, -0.1, 0.0], [3.1, 0.1, 0.2]);
        let at = |x: f64, y: f64| bx([x - 0.1, y - 0.1, 0.0], [x + 0.1, y + 0.1, 0.2]);
        let cases = [
            (at(3.0, -2.0), SpatialDescriptor::RightOf),
            (at(3.0, 2.0), SpatialDescriptor::LeftOf),
            (at(5.0, 0.0), SpatialDescriptor::Behind),
            (at(1.0, 0.0), SpatialDescriptor::InFrontOf),
        ];
        for (s, want) in cases {
            assert_eq!(describe(&s, &anchor, d(&s, &anchor), c), want);
        }
    }

    fn object(id: u32, name: &str, lo: [f64; 3], hi: [f64; 3], rels: Vec<ObservedRelation>) -> SceneObject {
        let cloud = PointCloud::from_points([Point3::from(lo), Point3::from(hi)]);
        let mut o = SceneObject::new(
            ObjectId(id),
            SemanticCaption::name_only(name),
            cloud,
            FeatureVector::basis(2, 0),
            FeatureVector::basis(2, 1),
        )
        .unwrap();
        o.fragments.push(Fragment {
            frame_id: 0,
            viewpoint: Point3::ORIGIN,
            point_indices: vec![0, 1],
            observed: 2,
            caption: o.caption.clone(),
            relations: rels,
        });
        o
    }

    fn rel(anchor: &str, semantic: &str) -> ObservedRelation {
        ObservedRelation {
            anchor_label: anchor.into(),
            spatial: "close by".into(),
            semantic: semantic.into(),
        }
    }

    #[test]
    fn relations_are_rebuilt_and_unknown_anchors_dropped() {
        let mut m = DsmMap::new(PipelineConfig::default());
        m.insert(object(0, "sofa", [0.0, 0.0, 0.0], [2.0, 1.0, 0.5], vec![]));
        m.insert(object(
            1,
            "pillow",
            [0.5, 0.2, 0.5],
            [0.9, 0.6, 0.7],
            vec![rel("sofa", "accessory placed on the sofa"), rel("unicorn", "?")],
        ));
        let u = update_relations(&mut m);
        assert_eq!(u.dropped, vec![(ObjectId(1), "unicorn".to_string())]);
        assert_eq!(m.relations.len(), 1);
        let r = &m.relations[0];
        assert_eq!((r.subject_id, r.anchor_id), (ObjectId(1), ObjectId(0)));
        assert_eq!(r.r_g_descriptor, SpatialDescriptor::On);
        assert_eq!(r.r_s, "accessory placed on the sofa");
        m.validate().unwrap();
    }

    #[test]
    fn occupancy_picks_relation_text() {
        let mut m = DsmMap::new(PipelineConfig::default());
        m.insert(object(0, "sofa", [0.0, 0.0, 0.0], [2.0, 1.0, 0.5], vec![]));
        let mut p = object(1, "pillow", [0.5, 0.2, 0.5], [0.9, 0.6, 0.7], vec![rel("sofa", "old")]);
        let mut later = p.fragments[0].clone();
        later.frame_id = 3;
        later.point_indices = vec![0];
        later.relations = vec![rel("sofa", "small view")];
        p.fragments.push(later);
        m.insert(p);
        update_relations(&mut m);
        assert_eq!(m.relations[0].r_s, "old");
    }

    #[test]
    fn anchor_ties_go_to_nearest() {
        let mut m = DsmMap::new(PipelineConfig::default());
        m.insert(object(0, "book", [5.0, 0.0, 0.0], [5.2, 0.2, 0.1], vec![]));
        m.insert(object(1, "book", [1.0, 0.0, 0.0], [1.2, 0.2, 0.1], vec![]));
        m.insert(object(2, "cup", [0.0, 0.0, 0.0], [0.1, 0.1, 0.1], vec![]));
        assert_eq!(resolve_anchor(&m, ObjectId(2), "book"), Some(ObjectId(1)));
        assert_eq!(resolve_anchor(&m, ObjectId(2), "cup"), None);
    }
}
