use serde::Serialize;

use super::camera::RenderSpec;
use crate::ingest::{project, ColorImage};
use crate::scene::{DsmMap, Point3};

pub const BACKGROUND: [u8; 3] = [40, 40, 40];
const HIGHLIGHT: [u8; 3] = [255, 200, 0];
const UNCOLORED: [u8; 3] = [180, 180, 180];
const MIN_SPLAT: i64 = 1;
const MAX_SPLAT: i64 = 24;

/// Typical spacing between an object's points, treating the cloud as a
/// surface sample of its box.
fn point_spacing(obj: &crate::scene::SceneObject) -> f64 {
    let e = obj.bbox.extent();
    let area = 2.0 * (e.x * e.y + e.y * e.z + e.z * e.x);
    (area / obj.cloud.len().max(1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenderedView {
    #[serde(skip)]
    pub image: ColorImage,
    pub spec: RenderSpec,
    /// Pixels covered by at least one splat.
    pub covered: usize,
    /// Nothing projected into the frame.
    pub blank: bool,
}

impl RenderedView {
    pub fn coverage(&self) -> f64 {
        self.covered as f64 / (self.spec.width as f64 * self.spec.height as f64)
    }
}

fn tint(c: [u8; 3]) -> [u8; 3] {
    std::array::from_fn(|i| ((c[i] as u16 + HIGHLIGHT[i] as u16) / 2) as u8)
}

/// 3x5 digit glyphs, one row per 3 bits.
const DIGITS: [[u8; 5]; 10] = [
    [7, 5, 5, 5, 7],
    [2, 6, 2, 2, 7],
    [7, 1, 7, 4, 7],
    [7, 1, 7, 1, 7],
    [5, 5, 7, 1, 1],
    [7, 4, 7, 1, 7],
    [7, 4, 7, 5, 7],
    [7, 1, 1, 1, 1],
    [7, 5, 7, 5, 7],
    [7, 5, 7, 1, 7],
];

fn put(img: &mut ColorImage, x: i64, y: i64, c: [u8; 3]) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.set(x as u32, y as u32, c);
    }
}

/// Writes `n` at `(x, y)` in white on black, each glyph pixel `scale` wide.
fn draw_number(img: &mut ColorImage, x: i64, y: i64, n: u32, scale: i64) {
    let text = n.to_string();
    let w = (text.len() as i64 * 4 + 1) * scale;
    for dy in 0..7 * scale {
        for dx in 0..w {
            put(img, x + dx, y + dy, [0, 0, 0]);
        }
    }
    for (k, ch) in text.bytes().enumerate() {
        let g = DIGITS[(ch - b'0') as usize];
        for (row, bits) in g.iter().enumerate() {
            for col in 0..3 {
                if bits & (4 >> col) != 0 {
                    for sy in 0..scale {
                        for sx in 0..scale {
                            put(
                                img,
                                x + (1 + k as i64 * 4 + col) * scale + sx,
                                y + (1 + row as i64) * scale + sy,
                                [255, 255, 255],
                            );
                        }
                    }
                }
            }
        }
    }
}

fn draw_line(img: &mut ColorImage, a: (f64, f64), b: (f64, f64), c: [u8; 3]) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).clamp(1, 8192);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = a.0 + (b.0 - a.0) * t;
        let y = a.1 + (b.1 - a.1) * t;
        put(img, x.round() as i64, y.round() as i64, c);
    }
}

const EDGES: [(usize, usize); 12] = [
    (0, 1), (0, 2), (0, 4), (1, 3), (1, 5), (2, 3), (2, 6), (3, 7), (4, 5), (4, 6), (5, 7), (6, 7),
];

/// Point-splat render of the map with a depth buffer. Splats are at least 3x3
/// pixels and grow to the projected point spacing so sparse clouds still read
/// as surfaces up close. Highlighted objects are tinted and outlined with their
/// id drawn beside them.
pub fn render_level(map: &DsmMap, spec: &RenderSpec) -> RenderedView {
    let (w, h) = (spec.width, spec.height);
    let intr = spec.intrinsics();
    let mut img = ColorImage::new(w, h, BACKGROUND);
    let mut zbuf = vec![f64::INFINITY; (w * h) as usize];
    for obj in map.objects.values() {
        let hl = spec.highlighted.contains(&obj.id);
        let colors = obj.cloud.colors();
        let spacing = point_spacing(obj);
        for (i, p) in obj.cloud.iter().enumerate() {
            let Some((u, v, z)) = project(&intr, &spec.pose, p) else {
                continue;
            };
            let splat = ((0.5 * intr.fy * spacing / z).ceil() as i64).clamp(MIN_SPLAT, MAX_SPLAT);
            let (cu, cv) = (u.round() as i64, v.round() as i64);
            if cu < -splat || cv < -splat || cu > w as i64 + splat || cv > h as i64 + splat {
                continue;
            }
            let base = colors.map_or(UNCOLORED, |c| c[i]);
            let c = if hl { tint(base) } else { base };
            for dv in -splat..=splat {
                for du in -splat..=splat {
                    let (x, y) = (cu + du, cv + dv);
                    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                        continue;
                    }
                    let k = (y as u32 * w + x as u32) as usize;
                    if z < zbuf[k] {
                        zbuf[k] = z;
                        img.set(x as u32, y as u32, c);
                    }
                }
            }
        }
    }
    let covered = zbuf.iter().filter(|z| z.is_finite()).count();
    let scale = (h as i64 / 256).max(1);
    for id in &spec.highlighted {
        let Some(obj) = map.get(*id) else { continue };
        let corners: Vec<Option<(f64, f64, f64)>> =
            obj.bbox.corners().iter().map(|c| project(&intr, &spec.pose, *c)).collect();
        for (a, b) in EDGES {
            if let (Some(pa), Some(pb)) = (corners[a], corners[b]) {
                draw_line(&mut img, (pa.0, pa.1), (pb.0, pb.1), HIGHLIGHT);
            }
        }
        let visible: Vec<(f64, f64)> = corners.iter().flatten().map(|c| (c.0, c.1)).collect();
        if !visible.is_empty() {
            let x = visible.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
            let y = visible.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            let x = (x as i64).clamp(0, w as i64 - 1);
            let y = (y as i64 - 8 * scale).clamp(0, h as i64 - 1);
            draw_number(&mut img, x, y, id.0, scale);
        }
    }
    if covered == 0 {
        log::warn!("{:?}-level view is blank", spec.level);
    }
    RenderedView {
        image: img,
        spec: spec.clone(),
        covered,
        blank: covered == 0,
    }
}

/// Projects every object's box center and reports whether all land in frame.
pub fn all_centers_in_frame(map: &DsmMap, spec: &RenderSpec) -> bool {
    let intr = spec.intrinsics();
    map.objects.values().all(|o| {
        let c: Point3 = o.center();
        matches!(project(&intr, &spec.pose, c), Some((u, v, _))
            if u >= 0.0 && v >= 0.0 && u < spec.width as f64 && v < spec.height as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;
    use crate::grounding::camera::Level;
    use crate::ingest::Pose;
    use crate::perception::FeatureVector;
    use crate::scene::{ObjectId, PointCloud, SceneObject, SemanticCaption};

    fn spec(pose: Pose) -> RenderSpec {
        RenderSpec {
            level: Level::Scene,
            pose,
            vfov_deg: 60.0,
            width: 64,
            height: 64,
            highlighted: Vec::new(),
        }
    }

    #[test]
    fn empty_map_is_background() {
        let m = DsmMap::new(PipelineConfig::default());
        let v = render_level(&m, &spec(Pose::IDENTITY));
        assert!(v.blank);
        assert!(v.image.pixels().iter().all(|p| *p == BACKGROUND));
    }

    #[test]
    fn nearer_point_wins() {
        let mut cloud = PointCloud::with_colors();
        cloud.push(Point3::new(0.0, 0.0, 2.0), Some([0, 0, 255]));
        cloud.push(Point3::new(0.0, 0.0, 1.0), Some([255, 0, 0]));
        cloud.push(Point3::new(0.0, 0.0, 3.0), Some([0, 255, 0]));
        let mut m = DsmMap::new(PipelineConfig::default());
        m.insert(
            SceneObject::new(
                ObjectId(0),
                SemanticCaption::name_only("x"),
                cloud,
                FeatureVector::basis(2, 0),
                FeatureVector::basis(2, 0),
            )
            .unwrap(),
        );
        let v = render_level(&m, &spec(Pose::IDENTITY));
        assert_eq!(v.image.get(32, 32), [255, 0, 0]);
        assert_eq!(v.covered, 9);
        assert!(all_centers_in_frame(&m, &v.spec));
    }

    #[test]
    fn digits_draw_inside_bounds() {
        let mut img = ColorImage::new(40, 20, BACKGROUND);
        draw_number(&mut img, 35, 15, 1234, 2);
        assert!(img.pixels().contains(&[255, 255, 255]));
    }
}
