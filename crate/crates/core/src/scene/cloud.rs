use super::geometry::{Aabb3, Point3};

/// Point cloud with optional per-point colors and class labels.
///
/// Coordinates are stored as `f32`, which is also the on-disk precision, so a
/// saved cloud reloads bit-for-bit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<[f32; 3]>,
    colors: Option<Vec<[u8; 3]>>,
    labels: Option<Vec<u32>>,
}

/// Label assigned to points that carry no class (evaluation only).
pub const UNLABELED: u32 = u32::MAX;

impl PointCloud {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_colors() -> Self {
        Self {
            colors: Some(Vec::new()),
            ..Self::default()
        }
    }

    /// Assembles a cloud from raw columns; `None` when optional columns have the wrong length.
    pub fn from_parts(
        points: Vec<[f32; 3]>,
        colors: Option<Vec<[u8; 3]>>,
        labels: Option<Vec<u32>>,
    ) -> Option<Self> {
        let n = points.len();
        if colors.as_ref().is_some_and(|c| c.len() != n) || labels.as_ref().is_some_and(|l| l.len() != n) {
            return None;
        }
        Some(Self { points, colors, labels })
    }

    pub fn from_points<I: IntoIterator<Item = Point3>>(points: I) -> Self {
        Self {
            points: points.into_iter().map(to_f32).collect(),
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn raw_points(&self) -> &[[f32; 3]] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn point(&self, i: usize) -> Point3 {
        to_point(self.points[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = Point3> + '_ {
        self.points.iter().map(|p| to_point(*p))
    }

    /// Appends a point. Color is recorded only when the cloud tracks colors.
    pub fn push(&mut self, p: Point3, color: Option<[u8; 3]>) {
        self.points.push(to_f32(p));
        if let Some(c) = self.colors.as_mut() {
            c.push(color.unwrap_or([255, 255, 255]));
        }
        if let Some(l) = self.labels.as_mut() {
            l.push(UNLABELED);
        }
    }

    /// Appends all points of `other`, keeping whichever columns both clouds carry.
    pub fn extend_from(&mut self, other: &PointCloud) {
        let was_empty = self.points.is_empty();
        self.points.extend_from_slice(&other.points);
        match (&mut self.colors, &other.colors) {
            (Some(c), Some(o)) => c.extend_from_slice(o),
            (None, Some(o)) if was_empty => self.colors = Some(o.clone()),
            _ => self.colors = None,
        }
        match (&mut self.labels, &other.labels) {
            (Some(l), Some(o)) => l.extend_from_slice(o),
            (None, Some(o)) if was_empty => self.labels = Some(o.clone()),
            _ => self.labels = None,
        }
    }

    /// Sub-cloud of the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self.colors.as_ref().map(|c| indices.iter().map(|&i| c[i]).collect()),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Replaces every label with `label`.
    pub fn set_uniform_label(&mut self, label: u32) {
        self.labels = Some(vec![label; self.points.len()]);
    }

    pub fn aabb(&self) -> Option<Aabb3> {
        Aabb3::from_points(self.iter())
    }

    pub fn centroid(&self) -> Option<Point3> {
        if self.is_empty() {
            return None;
        }
        let sum = self.iter().fold(Point3::ORIGIN, |acc, p| acc + p);
        Some(sum / self.len() as f64)
    }

    pub fn map_points(&self, f: impl Fn(Point3) -> Point3) -> PointCloud {
        PointCloud {
            points: self.iter().map(|p| to_f32(f(p))).collect(),
            colors: self.colors.clone(),
            labels: self.labels.clone(),
        }
    }
}

fn to_f32(p: Point3) -> [f32; 3] {
    [p.x as f32, p.y as f32, p.z as f32]
}

fn to_point(p: [f32; 3]) -> Point3 {
    Point3::new(p[0] as f64, p[1] as f64, p[2] as f64)
}
