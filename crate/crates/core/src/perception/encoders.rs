use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{FeatureVector, PerceptionError};
use crate::ingest::{ColorImage, Mask2d};
use crate::text::{canonicalize, fnv1a64};

pub trait TextEncoder: Send + Sync {
    fn embed_text(&self, text: &str) -> Result<FeatureVector, PerceptionError>;
}

pub trait ImageEncoder: Send + Sync {
    fn embed_image_crop(&self, image: &ColorImage, mask: &Mask2d) -> Result<FeatureVector, PerceptionError>;
}

/// Deterministic text encoder: a seeded Gaussian unit vector keyed by the
/// canonicalized text. Equal texts map to equal vectors; distinct texts are
/// nearly orthogonal.
#[derive(Debug, Clone)]
pub struct HashTextEncoder {
    pub dim: usize,
}

impl Default for HashTextEncoder {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

impl TextEncoder for HashTextEncoder {
    fn embed_text(&self, text: &str) -> Result<FeatureVector, PerceptionError> {
        let canon = canonicalize(text);
        if canon.is_empty() {
            return Err(PerceptionError::EmptyInput("text"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(canon.as_bytes()));
        let raw: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        FeatureVector::from_unnormalized(&raw)
    }
}

/// Deterministic image encoder: a 256-bin color histogram (3-3-2 bits of
/// R-G-B) over the masked pixels, scaled to unit length.
#[derive(Debug, Clone, Default)]
pub struct HistogramImageEncoder;

impl HistogramImageEncoder {
    pub fn bin(c: [u8; 3]) -> usize {
        ((c[0] as usize >> 5) << 5) | ((c[1] as usize >> 5) << 2) | (c[2] as usize >> 6)
    }
}

impl ImageEncoder for HistogramImageEncoder {
    fn embed_image_crop(&self, image: &ColorImage, mask: &Mask2d) -> Result<FeatureVector, PerceptionError> {
        let mut hist = vec![0.0f64; 256];
        let mut any = false;
        for (u, v) in mask.pixels() {
            if u < image.width() && v < image.height() {
                hist[Self::bin(image.get(u, v))] += 1.0;
                any = true;
            }
        }
        if !any {
            return Err(PerceptionError::EmptyInput("mask"));
        }
        FeatureVector::from_unnormalized(&hist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_embedding_is_deterministic_and_canonical() {
        let e = HashTextEncoder::default();
        let a = e.embed_text("Red  Apple").unwrap();
        let b = e.embed_text("red apple").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dim(), 256);
        assert!((a.norm() - 1.0).abs() < 1e-6);
        assert!((a.cosine(&b).unwrap() - 1.0).abs() < 1e-12);
        assert!(e.embed_text("   ").is_err());
    }

    #[test]
    fn distinct_texts_are_near_orthogonal() {
        // Over a small corpus, seeded Gaussian unit vectors in 256-D have
        // cosine spread ~ 1/sqrt(256); every pair stays well under 0.3.
        let e = HashTextEncoder::default();
        let corpus = [
            "red apple", "fire truck", "pillow", "sofa", "coffee table", "blue book",
            "white block", "cup", "lamp", "a soft, square pillow with a floral design",
        ];
        let v: Vec<_> = corpus.iter().map(|t| e.embed_text(t).unwrap()).collect();
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                assert!(v[i].cosine(&v[j]).unwrap().abs() < 0.3, "{} / {}", corpus[i], corpus[j]);
            }
        }
        let c = e.embed_text("red apple").unwrap().cosine(&e.embed_text("fire truck").unwrap()).unwrap();
        assert!(c.abs() < 0.3);
    }

    #[test]
    fn histogram_identity_and_disjoint_colors() {
        let mut img = ColorImage::new(8, 4, [220, 10, 10]);
        for u in 4..8 {
            for v in 0..4 {
                img.set(u, v, [10, 10, 220]);
            }
        }
        let enc = HistogramImageEncoder;
        let left = Mask2d::rect(8, 4, 0, 0, 4, 4);
        let right = Mask2d::rect(8, 4, 4, 0, 4, 4);
        let a = enc.embed_image_crop(&img, &left).unwrap();
        assert_eq!(a.cosine(&enc.embed_image_crop(&img, &left).unwrap()).unwrap(), 1.0);
        assert_eq!(a.cosine(&enc.embed_image_crop(&img, &right).unwrap()).unwrap(), 0.0);
        assert!(enc.embed_image_crop(&img, &Mask2d::empty(8, 4)).is_err());
    }
}
