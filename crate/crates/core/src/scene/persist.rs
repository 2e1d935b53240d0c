//! Map file format.
//!
//! A map is one JSON document carrying a `version` field. Point clouds below
//! [`SIDECAR_THRESHOLD`] points are stored inline as base64 little-endian
//! `f32` triples; larger clouds go to a binary sidecar next to the map file,
//! referenced by relative path. Feature vectors and fragment indices are also
//! base64 little-endian so they reload bit-exact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::cloud::PointCloud;
use super::geometry::{Aabb3, Point3};
use super::map::{
    DsmMap, Fragment, ObjectId, ObservedRelation, Relation, SceneObject, SemanticCaption,
};
use super::SceneError;
use crate::config::PipelineConfig;
use crate::perception::FeatureVector;

pub const FORMAT_VERSION: u32 = 1;
pub const SIDECAR_THRESHOLD: usize = 100_000;
const SIDECAR_MAGIC: &[u8; 8] = b"DSMPC1\0\0";

#[derive(Serialize, Deserialize)]
struct MapDoc {
    version: u32,
    scene_center: Option<Point3>,
    config_snapshot: PipelineConfig,
    objects: Vec<ObjectDoc>,
    relations: Vec<Relation>,
}

#[derive(Serialize, Deserialize)]
struct ObjectDoc {
    id: ObjectId,
    caption: SemanticCaption,
    cloud: CloudDoc,
    bbox: Aabb3,
    f_v: String,
    f_s: String,
    #[serde(default)]
    tentative: bool,
    #[serde(default)]
    finalized: bool,
    fragments: Vec<FragmentDoc>,
}

#[derive(Serialize, Deserialize)]
struct CloudDoc {
    count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    points: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    colors: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    labels: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sidecar: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct FragmentDoc {
    frame_id: u64,
    viewpoint: Point3,
    point_indices: String,
    observed: u32,
    caption: SemanticCaption,
    #[serde(default)]
    relations: Vec<ObservedRelation>,
}

/// Writes `map` to `path`, plus sidecars for large clouds.
pub fn save_map(map: &DsmMap, path: &Path) -> Result<(), SceneError> {
    let bytes = encode_map(map, Some(path))?;
    fs::write(path, bytes).map_err(|e| SceneError::io(path, e))
}

/// Serializes a map to JSON bytes. Large clouds need a `path` to place sidecars next to.
pub fn encode_map(map: &DsmMap, path: Option<&Path>) -> Result<Vec<u8>, SceneError> {
    let mut objects = Vec::with_capacity(map.objects.len());
    for obj in map.objects.values() {
        let cloud = if obj.cloud.len() >= SIDECAR_THRESHOLD {
            let path = path.ok_or_else(|| {
                SceneError::Format("large cloud requires a file path for its sidecar".into())
            })?;
            let name = sidecar_name(path, obj.id);
            write_sidecar(&path.with_file_name(&name), &obj.cloud)?;
            CloudDoc {
                count: obj.cloud.len(),
                points: None,
                colors: None,
                labels: None,
                sidecar: Some(name),
            }
        } else {
            inline_cloud(&obj.cloud)
        };
        objects.push(ObjectDoc {
            id: obj.id,
            caption: obj.caption.clone(),
            cloud,
            bbox: obj.bbox,
            f_v: encode_f32(obj.f_v.values()),
            f_s: encode_f32(obj.f_s.values()),
            tentative: obj.tentative,
            finalized: obj.finalized,
            fragments: obj
                .fragments
                .iter()
                .map(|f| FragmentDoc {
                    frame_id: f.frame_id,
                    viewpoint: f.viewpoint,
                    point_indices: encode_u32(&f.point_indices),
                    observed: f.observed,
                    caption: f.caption.clone(),
                    relations: f.relations.clone(),
                })
                .collect(),
        });
    }
    let doc = MapDoc {
        version: FORMAT_VERSION,
        scene_center: map.scene_center,
        config_snapshot: map.config_snapshot.clone(),
        objects,
        relations: map.relations.clone(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| SceneError::Format(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Reads a map written by [`save_map`].
pub fn load_map(path: &Path) -> Result<DsmMap, SceneError> {
    let bytes = fs::read(path).map_err(|e| SceneError::io(path, e))?;
    decode_map(&bytes, Some(path))
}

pub fn decode_map(bytes: &[u8], path: Option<&Path>) -> Result<DsmMap, SceneError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| SceneError::Parse {
            record: "document".into(),
            message: e.to_string(),
        })?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(SceneError::Version {
                found: v,
                expected: FORMAT_VERSION,
            })
        }
        None => {
            return Err(SceneError::Parse {
                record: "version".into(),
                message: "missing or non-integer version field".into(),
            })
        }
    }
    let parse = |record: String, e: String| SceneError::Parse { record, message: e };

    let config_snapshot = serde_json::from_value(value["config_snapshot"].clone())
        .map_err(|e| parse("config_snapshot".into(), e.to_string()))?;
    let scene_center = serde_json::from_value(value["scene_center"].clone())
        .map_err(|e| parse("scene_center".into(), e.to_string()))?;

    let mut map = DsmMap::new(config_snapshot);
    map.scene_center = scene_center;

    let objects = value["objects"]
        .as_array()
        .ok_or_else(|| parse("objects".into(), "expected an array".into()))?;
    for (i, raw) in objects.iter().enumerate() {
        let rec = format!("objects[{i}]");
        let doc: ObjectDoc =
            serde_json::from_value(raw.clone()).map_err(|e| parse(rec.clone(), e.to_string()))?;
        let cloud = read_cloud(&doc.cloud, path).map_err(|m| parse(format!("{rec}.cloud"), m))?;
        let f_v = decode_f32(&doc.f_v).map_err(|m| parse(format!("{rec}.f_v"), m))?;
        let f_s = decode_f32(&doc.f_s).map_err(|m| parse(format!("{rec}.f_s"), m))?;
        let mut fragments = Vec::with_capacity(doc.fragments.len());
        for (j, f) in doc.fragments.into_iter().enumerate() {
            let point_indices = decode_u32(&f.point_indices)
                .map_err(|m| parse(format!("{rec}.fragments[{j}]"), m))?;
            if point_indices.iter().any(|&k| k as usize >= cloud.len()) {
                return Err(parse(
                    format!("{rec}.fragments[{j}]"),
                    "point index out of range".into(),
                ));
            }
            fragments.push(Fragment {
                frame_id: f.frame_id,
                viewpoint: f.viewpoint,
                point_indices,
                observed: f.observed,
                caption: f.caption,
                relations: f.relations,
            });
        }
        let obj = SceneObject {
            id: doc.id,
            caption: doc.caption,
            cloud,
            bbox: doc.bbox,
            f_v: FeatureVector::from_raw(f_v),
            f_s: FeatureVector::from_raw(f_s),
            fragments,
            tentative: doc.tentative,
            finalized: doc.finalized,
        };
        if map.objects.insert(obj.id, obj).is_some() {
            return Err(parse(rec, format!("duplicate object id {}", doc.id)));
        }
    }
    map.relations = serde_json::from_value(value["relations"].clone())
        .map_err(|e| parse("relations".into(), e.to_string()))?;
    map.validate()?;
    Ok(map)
}

fn sidecar_name(map_path: &Path, id: ObjectId) -> String {
    let stem = map_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "map".into());
    format!("{stem}.obj{}.bin", id.0)
}

fn inline_cloud(c: &PointCloud) -> CloudDoc {
    let flat: Vec<f32> = c.raw_points().iter().flatten().copied().collect();
    CloudDoc {
        count: c.len(),
        points: Some(encode_f32(&flat)),
        colors: c.colors().map(|cs| B64.encode(cs.iter().flatten().copied().collect::<Vec<u8>>())),
        labels: c.labels().map(encode_u32),
        sidecar: None,
    }
}

fn read_cloud(doc: &CloudDoc, map_path: Option<&Path>) -> Result<PointCloud, String> {
    if let Some(rel) = &doc.sidecar {
        let base = map_path.ok_or("sidecar cloud needs the map file location")?;
        let p: PathBuf = base.with_file_name(rel);
        let cloud = read_sidecar(&p)?;
        if cloud.len() != doc.count {
            return Err(format!("sidecar holds {} points, expected {}", cloud.len(), doc.count));
        }
        return Ok(cloud);
    }
    let flat = decode_f32(doc.points.as_deref().ok_or("missing points")?)?;
    if flat.len() != doc.count * 3 {
        return Err(format!("expected {} coordinates, found {}", doc.count * 3, flat.len()));
    }
    let points = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let colors = match &doc.colors {
        Some(s) => {
            let raw = B64.decode(s).map_err(|e| e.to_string())?;
            if raw.len() != doc.count * 3 {
                return Err("color column length mismatch".into());
            }
            Some(raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
        }
        None => None,
    };
    let labels = doc.labels.as_deref().map(decode_u32).transpose()?;
    PointCloud::from_parts(points, colors, labels).ok_or_else(|| "column length mismatch".into())
}

fn write_sidecar(path: &Path, c: &PointCloud) -> Result<(), SceneError> {
    let mut buf = Vec::with_capacity(17 + c.len() * 19);
    buf.extend_from_slice(SIDECAR_MAGIC);
    buf.extend_from_slice(&(c.len() as u64).to_le_bytes());
    buf.push(u8::from(c.colors().is_some()) | (u8::from(c.labels().is_some()) << 1));
    for p in c.raw_points() {
        for v in p {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(cs) = c.colors() {
        buf.extend(cs.iter().flatten());
    }
    if let Some(ls) = c.labels() {
        for l in ls {
            buf.extend_from_slice(&l.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path).map_err(|e| SceneError::io(path, e))?;
    f.write_all(&buf).map_err(|e| SceneError::io(path, e))
}

fn read_sidecar(path: &Path) -> Result<PointCloud, String> {
    let buf = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if buf.len() < 17 || &buf[..8] != SIDECAR_MAGIC {
        return Err(format!("{}: not a cloud sidecar", path.display()));
    }
    let n = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
    let flags = buf[16];
    let (has_colors, has_labels) = (flags & 1 != 0, flags & 2 != 0);
    let need = 17 + n * 12 + if has_colors { n * 3 } else { 0 } + if has_labels { n * 4 } else { 0 };
    if buf.len() != need {
        return Err(format!("{}: truncated sidecar", path.display()));
    }
    let mut off = 17;
    let points = buf[off..off + n * 12]
        .chunks_exact(12)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes(c[k..k + 4].try_into().unwrap());
            [f(0), f(4), f(8)]
        })
        .collect();
    off += n * 12;
    let colors = has_colors.then(|| {
        let v = buf[off..off + n * 3].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        off += n * 3;
        v
    });
    let labels = has_labels.then(|| {
        buf[off..off + n * 4]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    });
    PointCloud::from_parts(points, colors, labels).ok_or_else(|| "column length mismatch".into())
}

fn encode_f32(v: &[f32]) -> String {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    B64.encode(bytes)
}

fn decode_f32(s: &str) -> Result<Vec<f32>, String> {
    let raw = B64.decode(s).map_err(|e| e.to_string())?;
    if raw.len() % 4 != 0 {
        return Err("byte length is not a multiple of 4".into());
    }
    Ok(raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn encode_u32(v: &[u32]) -> String {
    let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
    B64.encode(bytes)
}

fn decode_u32(s: &str) -> Result<Vec<u32>, String> {
    let raw = B64.decode(s).map_err(|e| e.to_string())?;
    if raw.len() % 4 != 0 {
        return Err("byte length is not a multiple of 4".into());
    }
    Ok(raw
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::SpatialDescriptor;

    pub(crate) fn sample_map(n_objects: u32) -> DsmMap {
        let mut m = DsmMap::new(PipelineConfig::default());
        for i in 0..n_objects {
            let base = Point3::new(i as f64, 0.5, 0.25);
            let mut cloud = PointCloud::with_colors();
            for k in 0..10 {
                cloud.push(base + Point3::new(0.01 * k as f64, 0.003, -0.2), Some([k as u8, 7, 9]));
            }
            let mut obj = SceneObject::new(
                ObjectId(i),
                SemanticCaption::new(format!("thing{i}"), "blue", "light", "holds stuff"),
                cloud,
                FeatureVector::from_raw(vec![0.6, 0.8]),
                FeatureVector::from_raw(vec![1.0, 0.0, 0.0]),
            )
            .unwrap();
            obj.fragments.push(Fragment {
                frame_id: 3,
                viewpoint: Point3::new(0.0, -1.0, 1.0),
                point_indices: (0..10).collect(),
                observed: 12,
                caption: obj.caption.clone(),
                relations: vec![ObservedRelation {
                    anchor_label: "table".into(),
                    spatial: "on".into(),
                    semantic: "rests on it".into(),
                }],
            });
            m.insert(obj);
        }
        for i in 1..n_objects.min(3) {
            m.relations.push(Relation {
                subject_id: ObjectId(i),
                anchor_id: ObjectId(0),
                r_g_distance: i as f64 * 0.1,
                r_g_descriptor: SpatialDescriptor::Near,
                r_s: "belongs together".into(),
            });
        }
        m
    }

    #[test]
    fn empty_map_round_trips() {
        let m = DsmMap::new(PipelineConfig::default());
        let bytes = encode_map(&m, None).unwrap();
        assert_eq!(decode_map(&bytes, None).unwrap(), m);
    }

    #[test]
    fn three_object_map_round_trips_through_file() {
        let m = sample_map(3);
        assert_eq!(m.relations.len(), 2);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.dsm");
        save_map(&m, &p).unwrap();
        assert_eq!(load_map(&p).unwrap(), m);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let bytes = encode_map(&sample_map(2), None).unwrap();
        let err = decode_map(&bytes[..bytes.len() / 2], None).unwrap_err();
        assert!(matches!(err, SceneError::Parse { .. }), "{err}");
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let bytes = encode_map(&sample_map(1), None).unwrap();
        let text = String::from_utf8(bytes).unwrap().replacen("\"version\": 1", "\"version\": 9", 1);
        let err = decode_map(text.as_bytes(), None).unwrap_err();
        assert!(matches!(err, SceneError::Version { found: 9, .. }));
    }

    #[test]
    fn bad_record_is_named() {
        let bytes = encode_map(&sample_map(2), None).unwrap();
        let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        v["objects"][1]["f_s"] = serde_json::Value::String("%%%".into());
        let err = decode_map(&serde_json::to_vec(&v).unwrap(), None).unwrap_err();
        assert!(err.to_string().contains("objects[1].f_s"), "{err}");
    }

    #[test]
    fn large_cloud_goes_to_sidecar() {
        let mut m = sample_map(1);
        let obj = m.objects.get_mut(&ObjectId(0)).unwrap();
        let mut cloud = PointCloud::new();
        for k in 0..SIDECAR_THRESHOLD {
            cloud.push(Point3::new(k as f64 * 1e-5, 0.0, 1.0), None);
        }
        cloud.set_uniform_label(4);
        obj.cloud = cloud;
        obj.refresh_bbox();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("big.dsm");
        save_map(&m, &p).unwrap();
        assert!(dir.path().join("big.dsm.obj0.bin").exists());
        assert!(fs::metadata(&p).unwrap().len() < 100_000);
        assert_eq!(load_map(&p).unwrap(), m);
    }
}
