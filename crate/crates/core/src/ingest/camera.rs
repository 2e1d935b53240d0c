use serde::{Deserialize, Serialize};

use super::image::{ColorImage, DepthImage};
use super::mask::Mask2d;
use super::IngestError;
use crate::scene::{Point3, PointCloud};

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), IngestError> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.cx > 0.0
            && self.cx < self.width as f64
            && self.cy > 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(IngestError::Camera(format!("invalid intrinsics {self:?}")))
        }
    }

    /// Intrinsics for a square-pixel camera with the given vertical field of view.
    pub fn from_vertical_fov(width: u32, height: u32, fov_y_deg: f64) -> Self {
        let f = height as f64 / 2.0 / (fov_y_deg.to_radians() / 2.0).tan();
        Self {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }
}

/// Camera-to-world rigid transform, 4x4 homogeneous, row-major.
///
/// Camera axes follow the usual vision convention: +x right, +y down, +z forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 16]", into = "[f64; 16]")]
pub struct Pose {
    m: [f64; 16],
}

impl TryFrom<[f64; 16]> for Pose {
    type Error = IngestError;
    fn try_from(m: [f64; 16]) -> Result<Self, IngestError> {
        Pose::from_row_major(m)
    }
}

impl From<Pose> for [f64; 16] {
    fn from(p: Pose) -> Self {
        p.m
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        m: [
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    };

    pub fn from_row_major(m: [f64; 16]) -> Result<Self, IngestError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(IngestError::Camera("pose has non-finite entries".into()));
        }
        if m[12] != 0.0 || m[13] != 0.0 || m[14] != 0.0 || m[15] != 1.0 {
            return Err(IngestError::Camera("pose bottom row must be (0, 0, 0, 1)".into()));
        }
        let p = Pose { m };
        let cols = [p.axis(0), p.axis(1), p.axis(2)];
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                if (cols[i].dot(&cols[j]) - want).abs() > 1e-4 {
                    return Err(IngestError::Camera("pose rotation is not orthonormal".into()));
                }
            }
        }
        Ok(p)
    }

    /// Builds a pose from rotation columns (camera axes in world frame) and a translation.
    pub fn from_axes(x: Point3, y: Point3, z: Point3, t: Point3) -> Self {
        Pose {
            m: [
                x.x, y.x, z.x, t.x, //
                x.y, y.y, z.y, t.y, //
                x.z, y.z, z.z, t.z, //
                0.0, 0.0, 0.0, 1.0,
            ],
        }
    }

    pub fn from_translation(t: Point3) -> Self {
        let mut p = Self::IDENTITY;
        p.m[3] = t.x;
        p.m[7] = t.y;
        p.m[11] = t.z;
        p
    }

    /// Camera at `eye` looking at `target`; image "up" is as close to `up` as possible.
    pub fn look_at(eye: Point3, target: Point3, up: Point3) -> Option<Self> {
        let forward = (target - eye).normalized()?;
        let right = forward.cross(&up).normalized()?;
        let down = forward.cross(&right);
        Some(Self::from_axes(right, down, forward, eye))
    }

    pub fn row_major(&self) -> [f64; 16] {
        self.m
    }

    /// World-frame direction of camera axis `i` (0 = x, 1 = y, 2 = z).
    pub fn axis(&self, i: usize) -> Point3 {
        Point3::new(self.m[i], self.m[4 + i], self.m[8 + i])
    }

    pub fn translation(&self) -> Point3 {
        Point3::new(self.m[3], self.m[7], self.m[11])
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Point3 {
        self.translation()
    }

    pub fn transform_point(&self, p: Point3) -> Point3 {
        let m = &self.m;
        Point3::new(
            m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11],
        )
    }

    /// World point into camera coordinates.
    pub fn inverse_transform_point(&self, p: Point3) -> Point3 {
        let d = p - self.translation();
        Point3::new(self.axis(0).dot(&d), self.axis(1).dot(&d), self.axis(2).dot(&d))
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        let mut m = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                m[r * 4 + c] = (0..4).map(|k| self.m[r * 4 + k] * other.m[k * 4 + c]).sum();
            }
        }
        Pose { m }
    }
}

/// Back-projects masked depth pixels to a world-frame cloud.
///
/// Depth is in millimeters. Zero-depth pixels and pixels beyond `max_depth`
/// meters are skipped. Colors are attached when a color image is given.
pub fn unproject(
    depth: &DepthImage,
    color: Option<&ColorImage>,
    intrinsics: &CameraIntrinsics,
    pose: &Pose,
    mask: &Mask2d,
    max_depth: f64,
) -> Result<PointCloud, IngestError> {
    if mask.width() != depth.width() || mask.height() != depth.height() {
        return Err(IngestError::Mask(format!(
            "mask {}x{} does not match depth {}x{}",
            mask.width(),
            mask.height(),
            depth.width(),
            depth.height()
        )));
    }
    let mut cloud = if color.is_some() {
        PointCloud::with_colors()
    } else {
        PointCloud::new()
    };
    for (u, v) in mask.pixels() {
        let d_mm = depth.get(u, v);
        if d_mm == 0 {
            continue;
        }
        if d_mm as f64 / 1000.0 > max_depth {
            continue;
        }
        cloud.push(back_project(intrinsics, pose, u, v, d_mm), color.map(|c| c.get(u, v)));
    }
    if cloud.is_empty() {
        return Err(IngestError::EmptyFragment);
    }
    Ok(cloud)
}

/// World point seen at pixel `(u, v)` with depth `depth_mm`.
pub fn back_project(intrinsics: &CameraIntrinsics, pose: &Pose, u: u32, v: u32, depth_mm: u16) -> Point3 {
    let d = depth_mm as f64 / 1000.0;
    let cam = Point3::new(
        (u as f64 - intrinsics.cx) * d / intrinsics.fx,
        (v as f64 - intrinsics.cy) * d / intrinsics.fy,
        d,
    );
    pose.transform_point(cam)
}

/// Projects a world point to `(u, v, depth_m)`; `None` when behind the camera.
pub fn project(intrinsics: &CameraIntrinsics, pose: &Pose, p: Point3) -> Option<(f64, f64, f64)> {
    let c = pose.inverse_transform_point(p);
    if c.z <= 0.0 {
        return None;
    }
    Some((
        intrinsics.fx * c.x / c.z + intrinsics.cx,
        intrinsics.fy * c.y / c.z + intrinsics.cy,
        c.z,
    ))
}
