//! Ray-cast synthetic RGB-D sequences with exact masks and a ground-truth map.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::config::PipelineConfig;
use crate::fusion::{describe, relation_distance};
use crate::ingest::{
    unproject, write_manifest, CameraIntrinsics, ColorImage, DepthImage, Detection2d, FrameRecord, Mask2d, Pose,
};
use crate::perception::{CaptionResult, HashTextEncoder, HistogramImageEncoder, ImageEncoder, TextEncoder};
use crate::scene::{save_map, Aabb3, DsmMap, ObjectId, ObservedRelation, Point3, Relation, SceneObject, SemanticCaption};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Shape {
    Box { min: [f64; 3], max: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
}

impl Shape {
    pub fn aabb(&self) -> Aabb3 {
        match self {
            Shape::Box { min, max } => Aabb3::from_corners((*min).into(), (*max).into()),
            Shape::Sphere { center, radius } => {
                let c: Point3 = (*center).into();
                let r = Point3::new(*radius, *radius, *radius);
                Aabb3::from_corners(c - r, c + r)
            }
        }
    }

    /// Smallest positive ray parameter `t` where `origin + t * dir` enters the shape.
    pub fn hit(&self, origin: Point3, dir: Point3) -> Option<f64> {
        match self {
            Shape::Box { min, max } => {
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                for a in 0..3 {
                    let (o, d) = (origin.get(a), dir.get(a));
                    if d.abs() < 1e-15 {
                        if o < min[a] || o > max[a] {
                            return None;
                        }
                        continue;
                    }
                    let (ta, tb) = ((min[a] - o) / d, (max[a] - o) / d);
                    t0 = t0.max(ta.min(tb));
                    t1 = t1.min(ta.max(tb));
                }
                (t1 >= t0 && t0 > 0.0).then_some(t0)
            }
            Shape::Sphere { center, radius } => {
                let oc = origin - Point3::from(*center);
                let a = dir.dot(&dir);
                let b = 2.0 * oc.dot(&dir);
                let c = oc.dot(&oc) - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if disc < 0.0 {
                    return None;
                }
                let t = (-b - disc.sqrt()) / (2.0 * a);
                (t > 0.0).then_some(t)
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            Shape::Box { min, max } => {
                if (0..3).any(|a| max[a] <= min[a] || !min[a].is_finite() || !max[a].is_finite()) {
                    return Err("box needs max > min on every axis".into());
                }
            }
            Shape::Sphere { center, radius } => {
                if *radius <= 0.0 || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
                    return Err("sphere needs a positive finite radius".into());
                }
            }
        }
        Ok(())
    }
}

const TOUCH_EPS: f64 = 1e-9;

/// Whether two solids share interior volume. Touching surfaces do not count.
pub fn shapes_overlap(a: &Shape, b: &Shape) -> bool {
    match (a, b) {
        (Shape::Box { min: a0, max: a1 }, Shape::Box { min: b0, max: b1 }) => {
            (0..3).all(|k| a0[k].max(b0[k]) < a1[k].min(b1[k]) - TOUCH_EPS)
        }
        (Shape::Sphere { center: c1, radius: r1 }, Shape::Sphere { center: c2, radius: r2 }) => {
            Point3::from(*c1).distance(&Point3::from(*c2)) < r1 + r2 - TOUCH_EPS
        }
        (Shape::Box { min, max }, Shape::Sphere { center, radius })
        | (Shape::Sphere { center, radius }, Shape::Box { min, max }) => {
            let d2: f64 = (0..3)
                .map(|k| {
                    let q = center[k].clamp(min[k], max[k]);
                    (center[k] - q).powi(2)
                })
                .sum();
            d2.sqrt() < radius - TOUCH_EPS
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRelation {
    /// Name of the related object.
    pub anchor: String,
    pub semantic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthObject {
    pub name: String,
    pub color: [u8; 3],
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default)]
    pub appearance: String,
    #[serde(default)]
    pub physical: String,
    #[serde(default)]
    pub affordance: String,
    #[serde(default)]
    pub relations: Vec<SynthRelation>,
}

impl SynthObject {
    pub fn caption(&self) -> SemanticCaption {
        SemanticCaption::new(&self.name, &self.appearance, &self.physical, &self.affordance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub eye: [f64; 3],
    pub target: [f64; 3],
}

fn full_turn() -> f64 {
    360.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trajectory {
    /// `frames` eyes evenly spaced on a horizontal circle, all looking at `center`.
    Orbit {
        center: [f64; 3],
        radius: f64,
        /// Eye height above `center`.
        height: f64,
        frames: usize,
        #[serde(default)]
        start_deg: f64,
        #[serde(default = "full_turn")]
        sweep_deg: f64,
    },
    Views(Vec<Viewpoint>),
}

impl Trajectory {
    pub fn viewpoints(&self) -> Vec<Viewpoint> {
        match self {
            Trajectory::Orbit {
                center,
                radius,
                height,
                frames,
                start_deg,
                sweep_deg,
            } => (0..*frames)
                .map(|i| {
                    let a = (start_deg + sweep_deg * i as f64 / *frames as f64).to_radians();
                    Viewpoint {
                        eye: [center[0] + radius * a.cos(), center[1] + radius * a.sin(), center[2] + height],
                        target: *center,
                    }
                })
                .collect(),
            Trajectory::Views(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthCamera {
    pub width: u32,
    pub height: u32,
    pub vfov_deg: f64,
}

impl Default for SynthCamera {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            vfov_deg: 60.0,
        }
    }
}

fn default_min_pixels() -> u64 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub camera: SynthCamera,
    pub trajectory: Trajectory,
    pub objects: Vec<SynthObject>,
    /// Standard deviation of additive depth noise, millimeters.
    #[serde(default)]
    pub depth_noise_mm: f64,
    /// Objects covering fewer pixels than this in a frame are not detected there.
    #[serde(default = "default_min_pixels")]
    pub min_pixels: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Spec(m));
        if self.objects.is_empty() {
            return bad("scene has no objects".into());
        }
        if self.camera.width < 8 || self.camera.height < 8 || !(self.camera.vfov_deg > 1.0 && self.camera.vfov_deg < 170.0) {
            return bad(format!("unusable camera {:?}", self.camera));
        }
        if self.trajectory.viewpoints().is_empty() {
            return bad("trajectory has no frames".into());
        }
        if !self.depth_noise_mm.is_finite() || self.depth_noise_mm < 0.0 {
            return bad("depth_noise_mm must be non-negative".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.name.trim().is_empty() {
                return bad(format!("object {i} has no name"));
            }
            o.shape.validate().map_err(|m| EvalError::Spec(format!("object {i} ({}): {m}", o.name)))?;
            for r in &o.relations {
                if !self.objects.iter().any(|a| a.name == r.anchor) {
                    return bad(format!("object {i} ({}) relates to unknown '{}'", o.name, r.anchor));
                }
                if r.anchor == o.name {
                    return bad(format!("object {i} ({}) relates to its own name", o.name));
                }
            }
        }
        for i in 0..self.objects.len() {
            for j in i + 1..self.objects.len() {
                if shapes_overlap(&self.objects[i].shape, &self.objects[j].shape) {
                    return bad(format!(
                        "objects {i} ({}) and {j} ({}) overlap",
                        self.objects[i].name, self.objects[j].name
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        CameraIntrinsics::from_vertical_fov(self.camera.width, self.camera.height, self.camera.vfov_deg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub record: FrameRecord,
    pub color: ColorImage,
    pub depth: DepthImage,
    /// Index of the object seen at each pixel, row-major; `None` for background.
    pub owner: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub spec: SceneSpec,
    pub frames: Vec<SynthFrame>,
    pub gt: DsmMap,
}

pub const BACKGROUND: [u8; 3] = [0, 0, 0];

fn camera_pose(v: &Viewpoint) -> Result<Pose, EvalError> {
    let (eye, target) = (Point3::from(v.eye), Point3::from(v.target));
    Pose::look_at(eye, target, Point3::new(0.0, 0.0, 1.0))
        .or_else(|| Pose::look_at(eye, target, Point3::new(0.0, 1.0, 0.0)))
        .ok_or_else(|| EvalError::Spec(format!("viewpoint eye equals target {:?}", v.eye)))
}

/// Nearest object along the ray through pixel `(u, v)`, with its camera depth in meters.
fn cast(spec: &SceneSpec, intr: &CameraIntrinsics, pose: &Pose, u: u32, v: u32) -> Option<(usize, f64)> {
    // Camera-frame direction with unit z, so the ray parameter is the depth.
    let dir = pose.axis(0) * ((u as f64 - intr.cx) / intr.fx)
        + pose.axis(1) * ((v as f64 - intr.cy) / intr.fy)
        + pose.axis(2);
    let origin = pose.center();
    spec.objects
        .iter()
        .enumerate()
        .filter_map(|(k, o)| o.shape.hit(origin, dir).map(|t| (k, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

fn render_frame(
    spec: &SceneSpec,
    intr: &CameraIntrinsics,
    pose: &Pose,
    noise: Option<&Normal<f64>>,
    rng: &mut ChaCha8Rng,
) -> (ColorImage, DepthImage, Vec<Option<usize>>) {
    let (w, h) = (spec.camera.width, spec.camera.height);
    let mut color = ColorImage::new(w, h, BACKGROUND);
    let mut depth = DepthImage::new(w, h);
    let mut owner = vec![None; (w * h) as usize];
    for v in 0..h {
        for u in 0..w {
            let Some((k, t)) = cast(spec, intr, pose, u, v) else {
                continue;
            };
            let mut mm = t * 1000.0;
            if let Some(n) = noise {
                mm += n.sample(rng);
            }
            let mm = mm.round();
            if !(1.0..=65535.0).contains(&mm) {
                continue;
            }
            depth.set(u, v, mm as u16);
            color.set(u, v, spec.objects[k].color);
            owner[(v * w + u) as usize] = Some(k);
        }
    }
    (color, depth, owner)
}

fn object_mask(owner: &[Option<usize>], w: u32, h: u32, k: usize) -> Mask2d {
    Mask2d::from_fn(w, h, |u, v| owner[(v * w + u) as usize] == Some(k))
}

/// Renders every frame of `spec`, emits one detection per sufficiently visible
/// object with its exact mask and caption, and assembles the ground-truth map
/// from the same unprojected pixels. `seed` drives the depth noise only.
pub fn synth_scene(spec: &SceneSpec, seed: u64) -> Result<SynthScene, EvalError> {
    spec.validate()?;
    let intr = spec.intrinsics();
    let (w, h) = (spec.camera.width, spec.camera.height);
    let noise = (spec.depth_noise_mm > 0.0)
        .then(|| Normal::new(0.0, spec.depth_noise_mm).expect("validated sigma"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Ground-truth geometry first, so relation phrases can be attached to the
    // per-frame caption hints.
    let views = spec.trajectory.viewpoints();
    let mut rendered = Vec::with_capacity(views.len());
    let mut gt_clouds = vec![crate::scene::PointCloud::with_colors(); spec.objects.len()];
    let mut visible_in = Vec::with_capacity(views.len());
    for vp in &views {
        let pose = camera_pose(vp)?;
        let (color, depth, owner) = render_frame(spec, &intr, &pose, noise.as_ref(), &mut rng);
        let mut visible = Vec::new();
        for (k, cloud) in gt_clouds.iter_mut().enumerate() {
            let mask = object_mask(&owner, w, h, k);
            if mask.count() < spec.min_pixels.max(1) {
                continue;
            }
            if let Ok(c) = unproject(&depth, Some(&color), &intr, &pose, &mask, f64::INFINITY) {
                cloud.extend_from(&c);
                visible.push((k, mask));
            }
        }
        visible_in.push(visible);
        rendered.push((pose, color, depth, owner));
    }
    let gt = gt_map(spec, gt_clouds)?;
    let phrase = |s: usize, a: usize| {
        gt.relation(ObjectId(s as u32), ObjectId(a as u32))
            .map(|r| r.r_g_descriptor.phrase().to_string())
            .unwrap_or_default()
    };

    let mut frames = Vec::with_capacity(views.len());
    for (i, ((pose, color, depth, owner), visible)) in rendered.into_iter().zip(visible_in).enumerate() {
        let seen: Vec<usize> = visible.iter().map(|(k, _)| *k).collect();
        let detections = visible
            .into_iter()
            .map(|(k, mask)| {
                let o = &spec.objects[k];
                let (x, y, bw, bh) = mask.bounding_rect().expect("mask is non-empty");
                let relations = o
                    .relations
                    .iter()
                    .filter_map(|r| {
                        let a = anchor_index(spec, k, &r.anchor)?;
                        seen.contains(&a).then(|| ObservedRelation {
                            anchor_label: r.anchor.clone(),
                            spatial: phrase(k, a),
                            semantic: r.semantic.clone(),
                        })
                    })
                    .collect();
                Detection2d {
                    label: o.name.clone(),
                    bbox2d: [x, y, bw, bh],
                    seg_c: mask,
                    seg_d: None,
                    confidence: 1.0,
                    caption: Some(CaptionResult {
                        caption: o.caption(),
                        relations,
                    }),
                }
            })
            .collect();
        frames.push(SynthFrame {
            record: FrameRecord {
                frame_id: i as u64,
                timestamp: i as f64 * 0.1,
                intrinsics: intr,
                pose,
                color_ref: format!("color/{i:06}.png"),
                depth_ref: format!("depth/{i:06}.png"),
                detections,
            },
            color,
            depth,
            owner,
        });
    }
    Ok(SynthScene {
        spec: spec.clone(),
        frames,
        gt,
    })
}

/// The related object nearest to `subject` among those carrying `name`.
fn anchor_index(spec: &SceneSpec, subject: usize, name: &str) -> Option<usize> {
    let c = spec.objects[subject].shape.aabb().center();
    spec.objects
        .iter()
        .enumerate()
        .filter(|(k, o)| *k != subject && o.name == name)
        .min_by(|a, b| {
            let da = a.1.shape.aabb().center().distance(&c);
            let db = b.1.shape.aabb().center().distance(&c);
            da.total_cmp(&db).then(a.0.cmp(&b.0))
        })
        .map(|(k, _)| k)
}

fn gt_map(spec: &SceneSpec, clouds: Vec<crate::scene::PointCloud>) -> Result<DsmMap, EvalError> {
    let mut map = DsmMap::new(PipelineConfig::default());
    let text = HashTextEncoder::default();
    for (k, (o, cloud)) in spec.objects.iter().zip(clouds).enumerate() {
        if cloud.is_empty() {
            return Err(EvalError::Spec(format!("object {k} ({}) is never visible", o.name)));
        }
        let swatch = ColorImage::new(1, 1, o.color);
        let f_v = HistogramImageEncoder.embed_image_crop(&swatch, &Mask2d::full(1, 1))?;
        let f_s = text.embed_text(&o.caption().embedding_text())?;
        map.insert(SceneObject::new(ObjectId(k as u32), o.caption(), cloud, f_v, f_s)?);
    }
    map.refresh_scene_center();
    let center = map.scene_center.unwrap_or(Point3::ORIGIN);
    for (k, o) in spec.objects.iter().enumerate() {
        for r in &o.relations {
            let a = anchor_index(spec, k, &r.anchor).expect("validated anchor");
            let (s_id, a_id) = (ObjectId(k as u32), ObjectId(a as u32));
            if map.relation(s_id, a_id).is_some() {
                continue;
            }
            let d = relation_distance(&map, s_id, a_id).expect("both objects exist");
            let descriptor = describe(&map.objects[&s_id].bbox, &map.objects[&a_id].bbox, d, center);
            map.relations.push(Relation {
                subject_id: s_id,
                anchor_id: a_id,
                r_g_distance: d,
                r_g_descriptor: descriptor,
                r_s: r.semantic.clone(),
            });
        }
    }
    map.validate()?;
    Ok(map)
}

impl SynthScene {
    /// Writes images, `manifest.jsonl`, the ground-truth map `gt.dsm` and the
    /// spec into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), EvalError> {
        for sub in ["color", "depth"] {
            let p = dir.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| EvalError::Io(p.display().to_string(), e))?;
        }
        for f in &self.frames {
            f.color.save(&dir.join(&f.record.color_ref))?;
            f.depth.save(&dir.join(&f.record.depth_ref))?;
        }
        let records: Vec<FrameRecord> = self.frames.iter().map(|f| f.record.clone()).collect();
        write_manifest(&dir.join("manifest.jsonl"), &records)?;
        save_map(&self.gt, &dir.join("gt.dsm"))?;
        let spec = serde_json::to_string_pretty(&self.spec).expect("spec serializes");
        let p = dir.join("spec.json");
        std::fs::write(&p, spec).map_err(|e| EvalError::Io(p.display().to_string(), e))?;
        Ok(())
    }
}
