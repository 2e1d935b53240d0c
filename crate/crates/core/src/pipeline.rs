//! Frame-by-frame map construction: fragments, features and captions per
//! detection, association, window voting, caption resolution and relation upkeep.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::fusion::{associate_frame, update_relations, CandidateObservation, FusionError};
use crate::ingest::{read_sequence, unproject, ColorImage, DepthImage, FrameRecord, IngestError};
use crate::perception::{
    CaptionResult, Captioner, HashTextEncoder, HistogramImageEncoder, ImageEncoder, MockCaptioner, PerceptionError,
    TextEncoder,
};
use crate::scene::{DsmMap, ObjectId, PointCloud, SceneError};
use crate::window::{bounding_sphere, observation_cone, resolve_attributes, vote_filter, Cone};

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame {frame_id}: {source}")]
    Frame {
        frame_id: u64,
        #[source]
        source: StageError,
    },
    #[error("sequence has no frames")]
    EmptySequence,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Model backends used while building.
pub struct Backends {
    pub captioner: Box<dyn Captioner>,
    pub text: Box<dyn TextEncoder>,
    pub image: Box<dyn ImageEncoder>,
}

impl Backends {
    pub fn mock() -> Self {
        Self {
            captioner: Box::new(MockCaptioner),
            text: Box::new(HashTextEncoder::default()),
            image: Box::new(HistogramImageEncoder),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BuildReport {
    pub frames: usize,
    pub detections: usize,
    /// Detections without valid depth under their mask.
    pub empty_detections: usize,
    pub objects: usize,
    pub merges: usize,
    pub tentative_objects: usize,
    pub observed_points: u64,
    pub kept_points: u64,
    pub dropped_points: u64,
    pub relations: usize,
    pub caption_fallbacks: usize,
    pub unresolved_relations: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameSummary {
    pub frame_id: u64,
    pub candidates: usize,
    pub merged: usize,
    pub created: Vec<ObjectId>,
    pub finalized: Vec<ObjectId>,
}

struct WindowEntry {
    cloud: PointCloud,
    cone: Cone,
}

#[derive(Default)]
struct ObjectWindow {
    entries: VecDeque<WindowEntry>,
    last_seen: usize,
}

pub struct MapBuilder {
    cfg: PipelineConfig,
    backends: Backends,
    map: DsmMap,
    windows: BTreeMap<ObjectId, ObjectWindow>,
    frames_seen: usize,
    report: BuildReport,
    started: Instant,
}

fn sphere_seed(base: u64, id: ObjectId, frame_id: u64) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((id.0 as u64) << 40) ^ frame_id
}

impl MapBuilder {
    pub fn new(cfg: PipelineConfig, backends: Backends) -> Result<Self, ConfigError> {
        cfg.fusion.validate()?;
        cfg.window.validate()?;
        Ok(Self {
            map: DsmMap::new(cfg.clone()),
            cfg,
            backends,
            windows: BTreeMap::new(),
            frames_seen: 0,
            report: BuildReport::default(),
            started: Instant::now(),
        })
    }

    pub fn map(&self) -> &DsmMap {
        &self.map
    }

    /// Runs one frame through every stage. Errors name the frame.
    pub fn process_frame(
        &mut self,
        rec: &FrameRecord,
        color: &ColorImage,
        depth: &DepthImage,
    ) -> Result<FrameSummary, PipelineError> {
        self.frame_inner(rec, color, depth).map_err(|source| PipelineError::Frame {
            frame_id: rec.frame_id,
            source,
        })
    }

    fn candidates(
        &mut self,
        rec: &FrameRecord,
        color: &ColorImage,
        depth: &DepthImage,
    ) -> Result<Vec<CandidateObservation>, StageError> {
        let labels: Vec<String> = rec.detections.iter().map(|d| d.label.clone()).collect();
        let viewpoint = rec.pose.center();
        let mut out = Vec::with_capacity(rec.detections.len());
        for (i, det) in rec.detections.iter().enumerate() {
            self.report.detections += 1;
            det.validate(rec.intrinsics.width, rec.intrinsics.height)
                .map_err(IngestError::Mask)?;
            let seg = det.segmentation()?;
            let cloud = match unproject(depth, Some(color), &rec.intrinsics, &rec.pose, &seg, self.cfg.max_depth) {
                Ok(c) => c,
                Err(IngestError::EmptyFragment) => {
                    log::debug!("frame {}: detection {i} ('{}') has no valid depth", rec.frame_id, det.label);
                    self.report.empty_detections += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let f_v = self.backends.image.embed_image_crop(color, &seg)?;
            let neighbors: Vec<String> = labels
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, l)| l.clone())
                .collect();
            let caption = match self.backends.captioner.caption_object(color, det, &neighbors) {
                Ok(c) => c,
                Err(PerceptionError::CaptionParse(m)) => {
                    log::warn!("frame {}: caption for '{}' unusable ({m}); using the label", rec.frame_id, det.label);
                    self.report.caption_fallbacks += 1;
                    CaptionResult::name_only(&det.label)
                }
                Err(e) => return Err(e.into()),
            };
            let text = if caption.caption.name.trim().is_empty() {
                det.label.clone()
            } else {
                caption.caption.embedding_text()
            };
            let f_s = self.backends.text.embed_text(&text)?;
            if let Some(c) = CandidateObservation::new(&det.label, cloud, f_v, f_s, caption, viewpoint, rec.frame_id) {
                out.push(c);
            }
        }
        Ok(out)
    }

    fn frame_inner(
        &mut self,
        rec: &FrameRecord,
        color: &ColorImage,
        depth: &DepthImage,
    ) -> Result<FrameSummary, StageError> {
        let cands = self.candidates(rec, color, depth)?;
        let assoc = associate_frame(&mut self.map, rec.frame_id, &cands, &self.cfg.fusion)?;
        self.report.merges += assoc.matches.len();

        let now = self.frames_seen;
        let mut touched = Vec::new();
        for (ci, oid) in assoc.assignment(cands.len()).into_iter().enumerate() {
            let Some(oid) = oid else { continue };
            let cand = &cands[ci];
            let points: Vec<_> = cand.fragment.iter().collect();
            let sphere = bounding_sphere(&points, self.cfg.window.mc_samples, sphere_seed(self.cfg.seed, oid, rec.frame_id));
            let w = self.windows.entry(oid).or_default();
            w.entries.push_back(WindowEntry {
                cloud: cand.fragment.clone(),
                cone: observation_cone(cand.viewpoint, &sphere),
            });
            w.last_seen = now;
            touched.push(oid);
        }
        for oid in &touched {
            self.refine(*oid);
        }

        let mut finalized = Vec::new();
        let window_len = self.cfg.window.window_len;
        self.windows.retain(|id, w| {
            let open = now - w.last_seen < window_len;
            if !open {
                finalized.push(*id);
            }
            open
        });
        for id in &finalized {
            if let Some(o) = self.map.objects.get_mut(id) {
                o.finalized = true;
            }
        }

        self.map.refresh_scene_center();
        update_relations(&mut self.map);
        self.frames_seen += 1;
        Ok(FrameSummary {
            frame_id: rec.frame_id,
            candidates: cands.len(),
            merged: assoc.matches.len(),
            created: assoc.new_objects.iter().map(|(_, id)| *id).collect(),
            finalized,
        })
    }

    /// Re-votes the object's window and rebuilds its cloud as the frozen
    /// points of fragments that left the window followed by the surviving
    /// points of the fragments still in it.
    fn refine(&mut self, oid: ObjectId) {
        let window_len = self.cfg.window.window_len;
        let w = self.windows.get_mut(&oid).expect("touched object has a window");
        while w.entries.len() > window_len {
            w.entries.pop_front();
        }
        let obj = self.map.objects.get_mut(&oid).expect("touched object exists");
        let first = obj.fragments.len() - w.entries.len();
        let frozen_len: usize = obj.fragments[..first].iter().map(|f| f.point_indices.len()).sum();
        let frozen: Vec<usize> = (0..frozen_len).collect();
        let mut cloud = obj.cloud.select(&frozen);

        let window: Vec<(&PointCloud, Cone)> = w.entries.iter().map(|e| (&e.cloud, e.cone)).collect();
        let vote = vote_filter(&window, &self.cfg.window);
        obj.tentative = vote.is_empty();
        if obj.tentative {
            log::warn!("object {oid}: every point in the window was voted out; keeping raw points");
        }
        for (k, e) in w.entries.iter().enumerate() {
            let kept: Vec<usize> = if obj.tentative {
                (0..e.cloud.len()).collect()
            } else {
                vote.kept[k].iter().map(|&i| i as usize).collect()
            };
            let start = cloud.len() as u32;
            cloud.extend_from(&e.cloud.select(&kept));
            obj.fragments[first + k].point_indices = (start..cloud.len() as u32).collect();
        }
        obj.cloud = cloud;
        obj.refresh_bbox();
        obj.caption = resolve_attributes(obj);
    }

    /// Closes every object and returns the map with a summary of the run.
    pub fn finish(mut self) -> Result<(DsmMap, BuildReport), PipelineError> {
        if self.frames_seen == 0 {
            return Err(PipelineError::EmptySequence);
        }
        for o in self.map.objects.values_mut() {
            o.finalized = true;
        }
        self.map.refresh_scene_center();
        let update = update_relations(&mut self.map);
        self.map.validate()?;
        let mut r = self.report;
        r.frames = self.frames_seen;
        r.objects = self.map.len();
        r.tentative_objects = self.map.objects.values().filter(|o| o.tentative).count();
        for o in self.map.objects.values() {
            for f in &o.fragments {
                r.observed_points += f.observed as u64;
                r.kept_points += f.point_indices.len() as u64;
            }
        }
        r.dropped_points = r.observed_points - r.kept_points;
        r.relations = self.map.relations.len();
        r.unresolved_relations = update.dropped.len();
        r.elapsed_ms = self.started.elapsed().as_millis() as u64;
        Ok((self.map, r))
    }
}

/// Builds a map from a manifest on disk.
pub fn build_from_manifest(
    manifest: &Path,
    cfg: PipelineConfig,
    backends: Backends,
) -> Result<(DsmMap, BuildReport), PipelineError> {
    let mut reader = read_sequence(manifest)?;
    let base = reader.base_dir().to_path_buf();
    let mut builder = MapBuilder::new(cfg, backends)?;
    for rec in &mut reader {
        let rec = rec?;
        let wrap = |e: IngestError| PipelineError::Frame {
            frame_id: rec.frame_id,
            source: e.into(),
        };
        let color = rec.load_color(&base).map_err(wrap)?;
        let depth = rec.load_depth(&base).map_err(wrap)?;
        builder.process_frame(&rec, &color, &depth)?;
        log::info!("frame {} done, {} objects", rec.frame_id, builder.map().len());
    }
    builder.finish()
}
