use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scene::Point3;

/// Smallest radius handed out, so every sphere has positive size.
pub const MIN_RADIUS: f64 = 1e-4;

/// Above this many points the candidate search runs on a fixed-stride subsample;
/// the final radius is still taken over every point.
const SEARCH_POINTS: usize = 4096;

/// Refinement steps applied to the best Monte-Carlo candidate.
const POLISH_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point3,
    pub radius: f64,
}

impl Sphere {
    pub fn contains(&self, p: &Point3) -> bool {
        self.center.distance(p) <= self.radius
    }
}

fn farthest(points: &[Point3], from: Point3) -> (usize, f64) {
    let mut best = (0, -1.0);
    for (i, p) in points.iter().enumerate() {
        let d = p.distance_squared(&from);
        if d > best.1 {
            best = (i, d);
        }
    }
    (best.0, best.1.sqrt())
}

fn max_distance(points: &[Point3], center: Point3) -> f64 {
    farthest(points, center).1
}

/// One Ritter pass: grow the sphere just enough to take in each outside point.
fn ritter(points: &[Point3], mut center: Point3, mut radius: f64) -> (Point3, f64) {
    for p in points {
        let d = center.distance(p);
        if d > radius {
            let grown = (radius + d) / 2.0;
            center = center + (*p - center) * ((grown - radius) / d);
            radius = grown;
        }
    }
    (center, radius)
}

/// Final sphere around `center`, inflated by a hair so that boundary points stay
/// inside after rounding.
fn finish(points: &[Point3], center: Point3) -> Sphere {
    let r = max_distance(points, center);
    Sphere {
        center,
        radius: (r * (1.0 + 1e-9) + 1e-12).max(MIN_RADIUS),
    }
}

/// Exact center of the smallest sphere around one to three points.
fn small_center(points: &[Point3]) -> Point3 {
    match *points {
        [a] => a,
        [a, b] => (a + b) / 2.0,
        [a, b, c] => {
            // A diametral sphere of some pair, or the triangle's circumcircle.
            for (p, q, r) in [(a, b, c), (b, c, a), (a, c, b)] {
                let m = (p + q) / 2.0;
                if m.distance(&r) <= m.distance(&p) {
                    return m;
                }
            }
            let (ab, ac) = (b - a, c - a);
            let n = ab.cross(&ac);
            let d = 2.0 * n.norm_squared();
            if d == 0.0 {
                return (a + b) / 2.0;
            }
            a + (n.cross(&ab) * ac.norm_squared() + ac.cross(&n) * ab.norm_squared()) / d
        }
        _ => unreachable!("called with one to three points"),
    }
}

/// Monte-Carlo bounding sphere. Each sample seeds a diametral sphere from a
/// random start point (start → farthest → farthest), expands it over the cloud,
/// and the smallest result is polished by moving the center toward the
/// current farthest point. Deterministic for a given seed.
pub fn bounding_sphere(points: &[Point3], mc_samples: usize, seed: u64) -> Sphere {
    if points.is_empty() {
        return Sphere {
            center: Point3::ORIGIN,
            radius: MIN_RADIUS,
        };
    }
    if points.len() < 4 {
        return finish(points, small_center(points));
    }
    let sub: Vec<Point3>;
    let search = if points.len() > SEARCH_POINTS {
        let stride = points.len().div_ceil(SEARCH_POINTS);
        sub = points.iter().step_by(stride).copied().collect();
        &sub[..]
    } else {
        points
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Point3, f64)> = None;
    for _ in 0..mc_samples.max(1) {
        let a = search[rng.random_range(0..search.len())];
        let (bi, _) = farthest(search, a);
        let b = search[bi];
        let (ci, dbc) = farthest(search, b);
        let c = search[ci];
        let (center, radius) = ritter(search, (b + c) / 2.0, dbc / 2.0);
        if best.is_none_or(|(_, r)| radius < r) {
            best = Some((center, radius));
        }
    }
    let (mut center, _) = best.expect("at least one sample");

    let mut best_center = center;
    let mut best_r = max_distance(search, center);
    for i in 1..=POLISH_STEPS {
        let (fi, _) = farthest(search, center);
        center = center + (search[fi] - center) * (1.0 / (i as f64 + 1.0));
        let r = max_distance(search, center);
        if r < best_r {
            best_r = r;
            best_center = center;
        }
    }
    finish(points, best_center)
}
