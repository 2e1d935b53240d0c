//! World-frame geometric primitives: points and axis-aligned boxes.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point (or free vector) in the world frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, o: &Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, o: &Point3) -> f64 {
        (*self - *o).norm()
    }

    pub fn distance_squared(&self, o: &Point3) -> f64 {
        (*self - *o).norm_squared()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn normalized(&self) -> Option<Point3> {
        let n = self.norm();
        (n > 1e-12).then(|| *self / n)
    }

    pub fn min_components(&self, o: &Point3) -> Point3 {
        Point3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_components(&self, o: &Point3) -> Point3 {
        Point3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn to_array(self) -> [f64; 3] {
        self.into()
    }

    pub fn get(&self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    fn add_assign(&mut self, o: Point3) {
        *self = *self + o;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned box in the world frame. `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb3 {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb3 {
    /// Builds a box, returning `None` if the corners are out of order or non-finite.
    pub fn new(min: Point3, max: Point3) -> Option<Self> {
        let ok = min.is_finite()
            && max.is_finite()
            && min.x <= max.x
            && min.y <= max.y
            && min.z <= max.z;
        ok.then_some(Self { min, max })
    }

    /// Box spanning two arbitrary corners.
    pub fn from_corners(a: Point3, b: Point3) -> Self {
        Self {
            min: a.min_components(&b),
            max: a.max_components(&b),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Point3>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = Self { min: first, max: first };
        for p in it {
            b.expand(p);
        }
        Some(b)
    }

    pub fn expand(&mut self, p: Point3) {
        self.min = self.min.min_components(&p);
        self.max = self.max.max_components(&p);
    }

    pub fn union(&self, o: &Aabb3) -> Aabb3 {
        Aabb3 {
            min: self.min.min_components(&o.min),
            max: self.max.max_components(&o.max),
        }
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn contains_point(&self, p: &Point3) -> bool {
        (0..3).all(|i| p.get(i) >= self.min.get(i) && p.get(i) <= self.max.get(i))
    }

    /// Overlap box, if the closed boxes intersect.
    pub fn intersection(&self, o: &Aabb3) -> Option<Aabb3> {
        Aabb3::new(self.min.max_components(&o.min), self.max.min_components(&o.max))
    }

    /// The eight corners, x varying fastest.
    pub fn corners(&self) -> [Point3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Point3::new(a.x, a.y, a.z),
            Point3::new(b.x, a.y, a.z),
            Point3::new(a.x, b.y, a.z),
            Point3::new(b.x, b.y, a.z),
            Point3::new(a.x, a.y, b.z),
            Point3::new(b.x, a.y, b.z),
            Point3::new(a.x, b.y, b.z),
            Point3::new(b.x, b.y, b.z),
        ]
    }

    /// Area overlap of the xy footprints divided by the smaller footprint area.
    pub fn footprint_overlap(&self, o: &Aabb3) -> f64 {
        let ix = (self.max.x.min(o.max.x) - self.min.x.max(o.min.x)).max(0.0);
        let iy = (self.max.y.min(o.max.y) - self.min.y.max(o.min.y)).max(0.0);
        let a = self.extent();
        let b = o.extent();
        let smaller = (a.x * a.y).min(b.x * b.y);
        if smaller <= 0.0 {
            return 0.0;
        }
        ix * iy / smaller
    }
}

/// Volumetric intersection over union.
///
/// Zero-volume boxes score 1 against an identical box and 0 otherwise.
pub fn aabb_iou(a: &Aabb3, b: &Aabb3) -> f64 {
    let va = a.volume();
    let vb = b.volume();
    if va <= 0.0 || vb <= 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    let inter = a.intersection(b).map_or(0.0, |i| i.volume());
    let union = va + vb - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Closed containment: `inner` lies within `outer` on every axis.
pub fn aabb_contains(inner: &Aabb3, outer: &Aabb3) -> bool {
    aabb_contains_within(inner, outer, 0.0)
}

/// Containment after growing `outer` by `margin` on every side.
pub fn aabb_contains_within(inner: &Aabb3, outer: &Aabb3, margin: f64) -> bool {
    (0..3).all(|i| inner.min.get(i) >= outer.min.get(i) - margin && inner.max.get(i) <= outer.max.get(i) + margin)
}
