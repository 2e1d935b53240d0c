use serde::{Deserialize, Serialize};

use super::IngestError;

/// Binary image mask, run-length encoded over the row-major pixel index.
///
/// Runs are `(start, length)` pairs, sorted, non-overlapping and non-adjacent
/// (touching runs are merged on construction).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MaskDoc", into = "MaskDoc")]
pub struct Mask2d {
    width: u32,
    height: u32,
    runs: Vec<(u32, u32)>,
}

#[derive(Serialize, Deserialize)]
struct MaskDoc {
    width: u32,
    height: u32,
    runs: Vec<(u32, u32)>,
}

impl TryFrom<MaskDoc> for Mask2d {
    type Error = IngestError;
    fn try_from(d: MaskDoc) -> Result<Self, IngestError> {
        Mask2d::from_runs(d.width, d.height, d.runs)
    }
}

impl From<Mask2d> for MaskDoc {
    fn from(m: Mask2d) -> Self {
        MaskDoc {
            width: m.width,
            height: m.height,
            runs: m.runs,
        }
    }
}

impl Mask2d {
    pub fn from_runs(width: u32, height: u32, runs: Vec<(u32, u32)>) -> Result<Self, IngestError> {
        let total = width as u64 * height as u64;
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(runs.len());
        let mut prev_end = 0u64;
        for (i, &(start, len)) in runs.iter().enumerate() {
            let end = start as u64 + len as u64;
            if len == 0 {
                return Err(IngestError::Mask(format!("run {i} has zero length")));
            }
            if end > total {
                return Err(IngestError::Mask(format!("run {i} exceeds {width}x{height} image")));
            }
            if i > 0 && (start as u64) < prev_end {
                return Err(IngestError::Mask(format!("run {i} is unsorted or overlapping")));
            }
            match merged.last_mut() {
                Some(last) if last.0 as u64 + last.1 as u64 == start as u64 => last.1 += len,
                _ => merged.push((start, len)),
            }
            prev_end = end;
        }
        Ok(Self { width, height, runs: merged })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self { width, height, runs: Vec::new() }
    }

    pub fn full(width: u32, height: u32) -> Self {
        let n = width * height;
        let runs = if n > 0 { vec![(0, n)] } else { Vec::new() };
        Self { width, height, runs }
    }

    /// Axis-aligned rectangle, clipped to the image.
    pub fn rect(width: u32, height: u32, x: u32, y: u32, w: u32, h: u32) -> Self {
        let x1 = (x + w).min(width);
        let y1 = (y + h).min(height);
        let runs = (y.min(height)..y1)
            .filter(|_| x < x1)
            .map(|row| (row * width + x, x1 - x))
            .collect();
        Self { width, height, runs }
    }

    /// Builds a mask from a per-pixel predicate over `(u, v)`.
    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut runs: Vec<(u32, u32)> = Vec::new();
        for v in 0..height {
            for u in 0..width {
                if f(u, v) {
                    let idx = v * width + u;
                    match runs.last_mut() {
                        Some(last) if last.0 + last.1 == idx => last.1 += 1,
                        _ => runs.push((idx, 1)),
                    }
                }
            }
        }
        Self { width, height, runs }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[(u32, u32)] {
        &self.runs
    }

    pub fn count(&self) -> u64 {
        self.runs.iter().map(|r| r.1 as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn contains(&self, u: u32, v: u32) -> bool {
        if u >= self.width || v >= self.height {
            return false;
        }
        let idx = v * self.width + u;
        let k = self.runs.partition_point(|r| r.0 <= idx);
        k > 0 && {
            let (s, l) = self.runs[k - 1];
            idx < s + l
        }
    }

    /// Masked pixels as `(u, v)`, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width;
        self.runs
            .iter()
            .flat_map(move |&(s, l)| (s..s + l).map(move |i| (i % w, i / w)))
    }

    /// Pixelwise intersection, computed by merging the two run lists.
    pub fn intersect(&self, other: &Mask2d) -> Result<Mask2d, IngestError> {
        if self.width != other.width || self.height != other.height {
            return Err(IngestError::Mask(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let (a, b) = (&self.runs, &other.runs);
        let (mut i, mut j) = (0, 0);
        let mut runs = Vec::new();
        while i < a.len() && j < b.len() {
            let (sa, ea) = (a[i].0, a[i].0 + a[i].1);
            let (sb, eb) = (b[j].0, b[j].0 + b[j].1);
            let s = sa.max(sb);
            let e = ea.min(eb);
            if s < e {
                runs.push((s, e - s));
            }
            if ea < eb {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(Mask2d {
            width: self.width,
            height: self.height,
            runs,
        })
    }

    /// Tight `(x, y, w, h)` box around the masked pixels.
    pub fn bounding_rect(&self) -> Option<(u32, u32, u32, u32)> {
        let mut it = self.pixels();
        let (u0, v0) = it.next()?;
        let (mut x0, mut x1, mut y0, mut y1) = (u0, u0, v0, v0);
        for (u, v) in it {
            x0 = x0.min(u);
            x1 = x1.max(u);
            y0 = y0.min(v);
            y1 = y1.max(v);
        }
        Some((x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn intersect_with_self_is_identity() {
        let m = Mask2d::rect(10, 8, 2, 1, 5, 4);
        assert_eq!(m.intersect(&m).unwrap(), m);
    }

    #[test]
    fn intersect_with_empty_is_empty() {
        let m = Mask2d::rect(10, 8, 2, 1, 5, 4);
        assert!(m.intersect(&Mask2d::empty(10, 8)).unwrap().is_empty());
    }

    #[test]
    fn rectangle_overlap_matches_per_pixel_oracle() {
        let a = Mask2d::rect(20, 15, 2, 3, 10, 7);
        let b = Mask2d::rect(20, 15, 6, 5, 12, 9);
        let got = a.intersect(&b).unwrap();
        let oracle = Mask2d::from_fn(20, 15, |u, v| a.contains(u, v) && b.contains(u, v));
        assert_eq!(got, oracle);
        assert_eq!(got, Mask2d::rect(20, 15, 6, 5, 6, 5));
        assert_eq!(got.count(), 30);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(Mask2d::full(4, 4).intersect(&Mask2d::full(4, 5)).is_err());
    }

    #[test]
    fn invalid_runs_are_rejected() {
        assert!(Mask2d::from_runs(4, 4, vec![(3, 2), (1, 1)]).is_err());
        assert!(Mask2d::from_runs(4, 4, vec![(0, 3), (2, 2)]).is_err());
        assert!(Mask2d::from_runs(4, 4, vec![(14, 3)]).is_err());
        assert!(Mask2d::from_runs(4, 4, vec![(0, 0)]).is_err());
        let m = Mask2d::from_runs(4, 4, vec![(0, 2), (2, 2)]).unwrap();
        assert_eq!(m.runs(), &[(0, 4)]);
    }

    #[test]
    fn bounding_rect() {
        let m = Mask2d::rect(10, 10, 3, 4, 2, 5);
        assert_eq!(m.bounding_rect(), Some((3, 4, 2, 5)));
        assert_eq!(Mask2d::empty(3, 3).bounding_rect(), None);
    }

    fn arb_mask() -> impl Strategy<Value = Mask2d> {
        proptest::collection::vec(any::<bool>(), 48).prop_map(|bits| Mask2d::from_fn(8, 6, |u, v| bits[(v * 8 + u) as usize]))
    }

    proptest! {
        #[test]
        fn intersection_is_bounded_and_pixelwise(a in arb_mask(), b in arb_mask()) {
            let i = a.intersect(&b).unwrap();
            prop_assert!(i.count() <= a.count().min(b.count()));
            for v in 0..6 {
                for u in 0..8 {
                    prop_assert_eq!(i.contains(u, v), a.contains(u, v) && b.contains(u, v));
                }
            }
        }

        #[test]
        fn json_round_trip(a in arb_mask()) {
            let s = serde_json::to_string(&a).unwrap();
            prop_assert_eq!(serde_json::from_str::<Mask2d>(&s).unwrap(), a);
        }
    }
}
