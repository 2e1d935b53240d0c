use serde::{Deserialize, Serialize};

use crate::config::RenderConfig;
use crate::ingest::{CameraIntrinsics, Pose};
use crate::scene::{Aabb3, DsmMap, ObjectId, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Object,
    Place,
    Scene,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Object, Level::Place, Level::Scene];
}

/// Objects whose centers lie within this distance of the focus form its place.
pub const PLACE_RADIUS: f64 = 1.0;
const NUDGE_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub level: Level,
    pub pose: Pose,
    pub vfov_deg: f64,
    pub width: u32,
    pub height: u32,
    pub highlighted: Vec<ObjectId>,
}

impl RenderSpec {
    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics::from_vertical_fov(self.width, self.height, self.vfov_deg)
    }
}

/// Unit direction from the scene center toward the anchor; `+x` when they coincide.
pub fn placement_direction(anchor: Point3, scene_center: Point3) -> Point3 {
    let d = anchor - scene_center;
    if d.norm() <= 1e-6 {
        return Point3::new(1.0, 0.0, 0.0);
    }
    d.normalized().unwrap_or(Point3::new(1.0, 0.0, 0.0))
}

fn look_at_up_z(eye: Point3, target: Point3) -> Pose {
    Pose::look_at(eye, target, Point3::new(0.0, 0.0, 1.0))
        .or_else(|| Pose::look_at(eye, target, Point3::new(0.0, 1.0, 0.0)))
        .unwrap_or(Pose::IDENTITY)
}

/// Camera looking at `anchor` from `distance` beyond it on the line from the scene center.
pub fn camera_on_line(anchor: Point3, scene_center: Point3, distance: f64) -> Pose {
    let eye = anchor + placement_direction(anchor, scene_center) * distance;
    look_at_up_z(eye, anchor)
}

fn inside_any(map: &DsmMap, p: &Point3) -> bool {
    map.objects.values().any(|o| o.bbox.contains_point(p))
}

/// Distance from the anchor at which a sphere of `radius` around `center`
/// fits inside a frustum of half-angle `half` looking at the anchor.
fn fit_distance(anchor: Point3, dir: Point3, center: Point3, radius: f64, half: f64) -> f64 {
    let mut t = (radius / half.sin()).max(1e-3);
    for _ in 0..200 {
        let eye = anchor + dir * t;
        let axis = (anchor - eye).normalized().unwrap_or(dir * -1.0);
        let to_c = center - eye;
        let dc = to_c.norm();
        if dc > radius {
            let off = (to_c.dot(&axis) / dc).clamp(-1.0, 1.0).acos();
            if off + (radius / dc).asin() <= half * 0.98 {
                return t;
            }
        }
        t *= 1.1;
    }
    t
}

/// Positions the camera for one level. `focus` is the object the view is
/// built around; its box center is the anchor point of the placement line.
pub fn place_camera(map: &DsmMap, focus: ObjectId, level: Level, render: &RenderConfig) -> (Pose, f64) {
    let Some(obj) = map.get(focus) else {
        return (Pose::IDENTITY, render.vfov_deg);
    };
    let anchor = obj.center();
    let center = map.scene_center.unwrap_or(anchor);
    let dir = placement_direction(anchor, center);
    let aspect = render.width as f64 / render.height as f64;
    let half_v = render.vfov_deg.to_radians() / 2.0;
    let half = half_v.min((half_v.tan() * aspect).atan());
    let (mut distance, vfov) = match level {
        Level::Object => {
            let diag = obj.bbox.diagonal().max(1e-3);
            let d = 2.0 * diag;
            // Narrow the view to the object's enclosing sphere so it fills the frame.
            let fit = 2.0 * ((diag / 2.0) / d).asin().to_degrees();
            (d, fit.min(render.vfov_deg))
        }
        Level::Place => {
            let cluster = map
                .objects
                .values()
                .filter(|o| o.center().distance(&anchor) <= PLACE_RADIUS)
                .map(|o| o.bbox)
                .reduce(|a, b| a.union(&b))
                .unwrap_or(obj.bbox);
            (4.0 * cluster.diagonal().max(1e-3), render.vfov_deg)
        }
        Level::Scene => {
            let bounds: Aabb3 = map.scene_bounds().unwrap_or(obj.bbox);
            let r = (bounds.diagonal() / 2.0).max(1e-3);
            (fit_distance(anchor, dir, bounds.center(), r, half), render.vfov_deg)
        }
    };
    let mut eye = anchor + dir * distance;
    let mut steps = 0;
    while inside_any(map, &eye) && steps < 10_000 {
        distance += NUDGE_STEP;
        eye = anchor + dir * distance;
        steps += 1;
    }
    (look_at_up_z(eye, anchor), vfov)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn object_level_ray_arithmetic() {
        let pose = camera_on_line(Point3::new(2.0, 0.0, 0.0), Point3::ORIGIN, 2.0 * 0.5);
        assert!((pose.center() - Point3::new(3.0, 0.0, 0.0)).norm() < 1e-12);
        // Camera z axis is the viewing direction.
        assert!((pose.axis(2) - Point3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn degenerate_line_uses_x_axis() {
        let pose = camera_on_line(Point3::ORIGIN, Point3::ORIGIN, 1.0);
        assert!((pose.center() - Point3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn vertical_line_still_has_a_pose() {
        let pose = camera_on_line(Point3::new(0.0, 0.0, 1.0), Point3::ORIGIN, 1.0);
        assert!((pose.center() - Point3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        assert!((pose.axis(2) - Point3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
    }
}
