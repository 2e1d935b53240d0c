//! Sequence manifests: JSON Lines, one [`FrameRecord`] per line, with image
//! paths resolved relative to the manifest.

use std::fs::File;
use std::io::{BufRead, BufReader, Lines, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::camera::{CameraIntrinsics, Pose};
use super::image::{ColorImage, DepthImage};
use super::mask::Mask2d;
use super::IngestError;
use crate::perception::CaptionResult;

/// One precomputed detection: label, 2D box, color-based and optional depth-based masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection2d {
    pub label: String,
    /// `(x, y, w, h)` in pixels.
    pub bbox2d: [u32; 4],
    pub seg_c: Mask2d,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seg_d: Option<Mask2d>,
    pub confidence: f64,
    /// Caption produced offline alongside the detection, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caption: Option<CaptionResult>,
}

impl Detection2d {
    pub fn validate(&self, width: u32, height: u32) -> Result<(), String> {
        let [x, y, w, h] = self.bbox2d;
        if x as u64 + w as u64 > width as u64 || y as u64 + h as u64 > height as u64 {
            return Err(format!("detection '{}' box exceeds the image", self.label));
        }
        if self.seg_c.is_empty() {
            return Err(format!("detection '{}' has an empty mask", self.label));
        }
        if self.seg_c.width() != width || self.seg_c.height() != height {
            return Err(format!("detection '{}' mask size differs from the image", self.label));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("detection '{}' confidence outside [0, 1]", self.label));
        }
        Ok(())
    }

    /// Final segmentation: `seg_c ∩ seg_d`, or `seg_c` alone when no depth mask was supplied.
    pub fn segmentation(&self) -> Result<Mask2d, IngestError> {
        let full;
        let seg_d = match &self.seg_d {
            Some(m) => m,
            None => {
                full = Mask2d::full(self.seg_c.width(), self.seg_c.height());
                &full
            }
        };
        intersect_segmentation(&self.seg_c, seg_d)
    }
}

pub fn intersect_segmentation(seg_c: &Mask2d, seg_d: &Mask2d) -> Result<Mask2d, IngestError> {
    seg_c.intersect(seg_d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub timestamp: f64,
    pub intrinsics: CameraIntrinsics,
    pub pose: Pose,
    pub color_ref: String,
    pub depth_ref: String,
    #[serde(default)]
    pub detections: Vec<Detection2d>,
}

impl FrameRecord {
    pub fn load_color(&self, base: &Path) -> Result<ColorImage, IngestError> {
        ColorImage::load(&base.join(&self.color_ref))
    }

    pub fn load_depth(&self, base: &Path) -> Result<DepthImage, IngestError> {
        DepthImage::load(&base.join(&self.depth_ref))
    }
}

/// Streaming manifest reader. Yields records in file order and enforces
/// strictly increasing frame ids.
pub struct SequenceReader {
    lines: Lines<BufReader<File>>,
    base: PathBuf,
    line_no: usize,
    last_id: Option<u64>,
    failed: bool,
}

pub fn read_sequence(path: &Path) -> Result<SequenceReader, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::Io(path.display().to_string(), e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(SequenceReader {
        lines: BufReader::new(file).lines(),
        base,
        line_no: 0,
        last_id: None,
        failed: false,
    })
}

impl SequenceReader {
    /// Directory image references are resolved against.
    pub fn base_dir(&self) -> &Path {
        &self.base
    }

    fn parse_line(&mut self, text: &str) -> Result<FrameRecord, IngestError> {
        let line = self.line_no;
        let bad = |message: String| IngestError::Manifest { line, message };
        let rec: FrameRecord = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if let Some(prev) = self.last_id {
            if rec.frame_id <= prev {
                return Err(bad(format!(
                    "frame_id {} does not follow {prev} (must strictly increase)",
                    rec.frame_id
                )));
            }
        }
        rec.intrinsics.validate().map_err(|e| bad(e.to_string()))?;
        for r in [&rec.color_ref, &rec.depth_ref] {
            let p = self.base.join(r);
            if !p.is_file() {
                return Err(bad(format!("frame {}: missing image file {}", rec.frame_id, p.display())));
            }
        }
        for d in &rec.detections {
            d.validate(rec.intrinsics.width, rec.intrinsics.height)
                .map_err(|e| bad(format!("frame {}: {e}", rec.frame_id)))?;
        }
        self.last_id = Some(rec.frame_id);
        Ok(rec)
    }
}

impl Iterator for SequenceReader {
    type Item = Result<FrameRecord, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(IngestError::Io(self.base.display().to_string(), e)));
                }
            };
            self.line_no += 1;
            if text.trim().is_empty() {
                continue;
            }
            let r = self.parse_line(&text);
            self.failed = r.is_err();
            return Some(r);
        }
    }
}

/// Writes records as a JSON Lines manifest.
pub fn write_manifest(path: &Path, records: &[FrameRecord]) -> Result<(), IngestError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| IngestError::Manifest {
            line: 0,
            message: e.to_string(),
        })?;
        out.push(b'\n');
    }
    let mut f = File::create(path).map_err(|e| IngestError::Io(path.display().to_string(), e))?;
    f.write_all(&out)
        .map_err(|e| IngestError::Io(path.display().to_string(), e))
}
