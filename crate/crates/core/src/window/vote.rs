use super::cone::{cone_contains, Cone};
use crate::config::WindowConfig;
use crate::scene::PointCloud;

/// Result of one window vote, indexed like the input fragments.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteOutcome {
    /// Indices of surviving points within each fragment.
    pub kept: Vec<Vec<u32>>,
    pub scores: Vec<Vec<f64>>,
}

impl VoteOutcome {
    pub fn kept_count(&self) -> usize {
        self.kept.iter().map(Vec::len).sum()
    }

    /// Every point was voted out.
    pub fn is_empty(&self) -> bool {
        self.kept_count() == 0
    }

    /// Surviving points, concatenated in fragment order.
    pub fn kept_cloud(&self, fragments: &[(&PointCloud, Cone)]) -> PointCloud {
        let mut out = PointCloud::new();
        for ((cloud, _), idx) in fragments.iter().zip(&self.kept) {
            let idx: Vec<usize> = idx.iter().map(|&i| i as usize).collect();
            out.extend_from(&cloud.select(&idx));
        }
        out
    }
}

/// Scores every point of the window against every cone of the window:
/// `+r_in` per cone containing it, `-r_out` per cone that does not.
/// Points with a positive total survive.
pub fn vote_filter(fragments: &[(&PointCloud, Cone)], cfg: &WindowConfig) -> VoteOutcome {
    let cones: Vec<Cone> = fragments.iter().map(|(_, c)| *c).collect();
    let mut kept = Vec::with_capacity(fragments.len());
    let mut scores = Vec::with_capacity(fragments.len());
    for (cloud, _) in fragments {
        let mut k = Vec::new();
        let mut s = Vec::with_capacity(cloud.len());
        for (i, p) in cloud.iter().enumerate() {
            let score: f64 = cones
                .iter()
                .map(|c| if cone_contains(c, &p) { cfg.r_in } else { -cfg.r_out })
                .sum();
            if score > 0.0 {
                k.push(i as u32);
            }
            s.push(score);
        }
        kept.push(k);
        scores.push(s);
    }
    VoteOutcome { kept, scores }
}
