use serde::{Deserialize, Serialize};

use super::sphere::Sphere;
use crate::scene::Point3;

/// Observation cone from a viewpoint circumscribing a bounding sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub apex: Point3,
    pub axis: Point3,
    pub half_angle: f64,
    /// The viewpoint is inside the sphere; the cone accepts every point.
    pub degenerate: bool,
}

pub fn observation_cone(viewpoint: Point3, sphere: &Sphere) -> Cone {
    let to_center = sphere.center - viewpoint;
    let d = to_center.norm();
    if d <= sphere.radius {
        return Cone {
            apex: viewpoint,
            axis: to_center.normalized().unwrap_or(Point3::new(0.0, 0.0, 1.0)),
            half_angle: std::f64::consts::FRAC_PI_2,
            degenerate: true,
        };
    }
    Cone {
        apex: viewpoint,
        axis: to_center / d,
        half_angle: (sphere.radius / d).asin(),
        degenerate: false,
    }
}

impl Cone {
    pub fn contains(&self, p: &Point3) -> bool {
        cone_contains(self, p)
    }
}

/// Membership test. The apex itself counts as inside.
pub fn cone_contains(cone: &Cone, p: &Point3) -> bool {
    if cone.degenerate {
        return true;
    }
    let v = *p - cone.apex;
    let n = v.norm();
    if n == 0.0 {
        return true;
    }
    let along = v.dot(&cone.axis);
    along > 0.0 && along >= n * cone.half_angle.cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn sphere(c: Point3, r: f64) -> Sphere {
        Sphere { center: c, radius: r }
    }

    #[test]
    fn half_angles() {
        let c = observation_cone(Point3::ORIGIN, &sphere(Point3::new(2.0, 0.0, 0.0), 1.0));
        assert!((c.half_angle - FRAC_PI_6).abs() < 1e-12);
        assert!((c.axis - Point3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        let s2 = 2f64.sqrt();
        let c = observation_cone(Point3::ORIGIN, &sphere(Point3::new(0.0, s2, 0.0), 1.0));
        assert!((c.half_angle - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn inside_viewpoint_is_degenerate() {
        let c = observation_cone(Point3::new(0.1, 0.0, 0.0), &sphere(Point3::ORIGIN, 1.0));
        assert!(c.degenerate);
        assert!(c.contains(&Point3::new(-100.0, 3.0, 7.0)));
    }

    #[test]
    fn axis_and_behind() {
        let c = observation_cone(Point3::ORIGIN, &sphere(Point3::new(0.0, 0.0, 5.0), 1.0));
        assert!(c.contains(&Point3::new(0.0, 0.0, 20.0)));
        assert!(c.contains(&Point3::ORIGIN));
        assert!(!c.contains(&Point3::new(0.0, 0.0, -1.0)));
        assert!(!c.contains(&Point3::new(5.0, 0.0, 1.0)));
    }

    #[test]
    fn matches_angle_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cone = observation_cone(Point3::new(0.3, -0.2, 0.1), &sphere(Point3::new(1.0, 1.0, 2.0), 0.7));
        for _ in 0..10_000 {
            let p = Point3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let v = p - cone.apex;
            let angle = (v.dot(&cone.axis) / v.norm()).clamp(-1.0, 1.0).acos();
            let oracle = angle <= cone.half_angle && v.dot(&cone.axis) > 0.0;
            assert_eq!(cone.contains(&p), oracle, "{p:?}");
        }
    }
}
