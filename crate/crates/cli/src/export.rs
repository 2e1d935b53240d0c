//! Per-object ASCII point clouds and a scene summary for external viewers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use dsm_core::scene::{DsmMap, PointCloud, Relation, SemanticCaption};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Ply,
    Xyz,
}

pub const FORMATS: [&str; 2] = ["ply", "xyz"];

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ply" => Ok(Self::Ply),
            "xyz" => Ok(Self::Xyz),
            _ => bail!("unknown export format '{s}' (supported: {})", FORMATS.join(", ")),
        }
    }

    fn extension(self) -> &'static str {
        match self {
            Self::Ply => "ply",
            Self::Xyz => "xyz",
        }
    }
}

fn color_at(cloud: &PointCloud, i: usize) -> [u8; 3] {
    cloud.colors().map_or([255, 255, 255], |c| c[i])
}

pub fn encode_cloud(cloud: &PointCloud, format: Format) -> String {
    let mut s = String::new();
    if format == Format::Ply {
        s.push_str("ply\nformat ascii 1.0\n");
        let _ = writeln!(s, "element vertex {}", cloud.len());
        s.push_str("property float x\nproperty float y\nproperty float z\n");
        s.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n");
    }
    for (i, p) in cloud.raw_points().iter().enumerate() {
        let [r, g, b] = color_at(cloud, i);
        let _ = writeln!(s, "{} {} {} {r} {g} {b}", p[0], p[1], p[2]);
    }
    s
}

#[derive(Serialize)]
struct ObjectSummary<'a> {
    id: u32,
    caption: &'a SemanticCaption,
    points: usize,
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    file: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    objects: Vec<ObjectSummary<'a>>,
    relations: &'a [Relation],
}

/// Writes one cloud file per object plus `summary.json`; returns the paths written.
pub fn export_map(map: &DsmMap, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut objects = Vec::new();
    for o in map.objects.values() {
        let file = format!("object_{:04}.{}", o.id.0, format.extension());
        let path = dir.join(&file);
        std::fs::write(&path, encode_cloud(&o.cloud, format)).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        objects.push(ObjectSummary {
            id: o.id.0,
            caption: &o.caption,
            points: o.cloud.len(),
            bbox_min: [o.bbox.min.x, o.bbox.min.y, o.bbox.min.z],
            bbox_max: [o.bbox.max.x, o.bbox.max.y, o.bbox.max.z],
            file,
        });
    }
    let summary = Summary {
        objects,
        relations: &map.relations,
    };
    let path = dir.join("summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dsm_core::scene::Point3;

    #[test]
    fn unknown_format_lists_supported() {
        let e = Format::parse("xyz9").unwrap_err().to_string();
        assert!(e.contains("xyz9") && e.contains("ply, xyz"), "{e}");
        assert_eq!(Format::parse("PLY").unwrap(), Format::Ply);
    }

    #[test]
    fn one_line_per_point() {
        let c = PointCloud::from_points([Point3::new(0.0, 1.0, 2.0), Point3::new(0.5, 0.25, -1.0)]);
        let xyz = encode_cloud(&c, Format::Xyz);
        assert_eq!(xyz, "0 1 2 255 255 255\n0.5 0.25 -1 255 255 255\n");
        let ply = encode_cloud(&c, Format::Ply);
        assert!(ply.contains("element vertex 2\n"));
        assert!(ply.ends_with(&xyz));
    }
}
