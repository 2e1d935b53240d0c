use crate::scene::{Fragment, SceneObject, SemanticCaption};

/// Fragment whose observation has the most surviving points; ties go to the
/// latest frame.
pub fn dominant_fragment(fragments: &[Fragment]) -> Option<&Fragment> {
    fragments
        .iter()
        .max_by_key(|f| (f.point_indices.len(), f.frame_id))
}

/// Caption of the dominant fragment, or the object's current caption when it
/// has no fragments.
pub fn resolve_attributes(obj: &SceneObject) -> SemanticCaption {
    dominant_fragment(&obj.fragments)
        .map(|f| f.caption.clone())
        .unwrap_or_else(|| obj.caption.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::FeatureVector;
    use crate::scene::{ObjectId, Point3, PointCloud};

    fn frag(frame_id: u64, kept: u32, name: &str) -> Fragment {
        Fragment {
            frame_id,
            viewpoint: Point3::ORIGIN,
            point_indices: (0..kept).collect(),
            observed: kept,
            caption: SemanticCaption::new("pillow", name, "", ""),
            relations: Vec::new(),
        }
    }

    fn object(fragments: Vec<Fragment>) -> SceneObject {
        let mut o = SceneObject::new(
            ObjectId(0),
            SemanticCaption::name_only("pillow"),
            PointCloud::from_points([Point3::ORIGIN]),
            FeatureVector::basis(2, 0),
            FeatureVector::basis(2, 1),
        )
        .unwrap();
        o.fragments = fragments;
        o
    }

    #[test]
    fn occupancy_cases() {
        assert_eq!(resolve_attributes(&object(vec![frag(0, 5, "alpha")])).appearance, "alpha");
        let o = object(vec![frag(0, 900, "alpha"), frag(1, 100, "beta")]);
        assert_eq!(resolve_attributes(&o).appearance, "alpha");
        let o = object(vec![frag(0, 50, "alpha"), frag(1, 50, "beta")]);
        assert_eq!(resolve_attributes(&o).appearance, "beta");
        assert_eq!(resolve_attributes(&object(Vec::new())).name, "pillow");
    }
}
