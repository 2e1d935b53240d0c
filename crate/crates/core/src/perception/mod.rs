//! Perception backends: feature encoders, captioners, and the chat-completion
//! client that carries every remote model call.
//!
//! All network traffic in the crate goes through [`ChatClient`].

mod caption;
mod chat;
mod encoders;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use caption::{
    canned_caption, parse_caption_reply, Captioner, MockCaptioner, RemoteCaptioner,
    CAPTION_PROMPT_V1,
};
pub use chat::{
    ChatClient, ChatConfig, ChatMessage, ChatRequest, ChatResponse, HttpReply, HttpTransport,
    TransportFailure, UreqTransport, Usage,
};
pub use encoders::{HashTextEncoder, HistogramImageEncoder, ImageEncoder, TextEncoder};

use crate::scene::{ObservedRelation, SemanticCaption};

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("feature dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("credential rejected (HTTP {0})")]
    Credential(u16),
    #[error("request rejected (HTTP {status}): {body}")]
    Config { status: u16, body: String },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("malformed completion response: {0}")]
    Response(String),
    #[error("caption reply did not match the schema: {0}")]
    CaptionParse(String),
    #[error("backend not configured: {0}")]
    NotConfigured(String),
}

/// Unit-norm feature vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    values: Vec<f32>,
}

impl FeatureVector {
    /// Normalizes `values` to unit length; fails on a zero vector.
    pub fn from_unnormalized(values: &[f64]) -> Result<Self, PerceptionError> {
        let n = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n <= 0.0 || !n.is_finite() {
            return Err(PerceptionError::EmptyInput("zero feature vector"));
        }
        Ok(Self {
            values: values.iter().map(|v| (v / n) as f32).collect(),
        })
    }

    /// Wraps stored values as-is.
    pub fn from_raw(values: Vec<f32>) -> Self {
        Self { values }
    }

    /// Unit vector along axis `i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut values = vec![0.0; dim];
        values[i] = 1.0;
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &FeatureVector) -> Result<f64, PerceptionError> {
        if self.dim() != other.dim() {
            return Err(PerceptionError::DimensionMismatch(self.dim(), other.dim()));
        }
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a as f64 * *b as f64)
            .sum();
        let n = self.norm() * other.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        Ok((dot / n).clamp(-1.0, 1.0))
    }

    /// Running mean over `count` previous observations plus `other`, renormalized.
    pub fn running_mean(&self, count: usize, other: &FeatureVector) -> Result<Self, PerceptionError> {
        if self.dim() != other.dim() {
            return Err(PerceptionError::DimensionMismatch(self.dim(), other.dim()));
        }
        let acc: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| *a as f64 * count as f64 + *b as f64)
            .collect();
        Self::from_unnormalized(&acc).or_else(|_| Ok(other.clone()))
    }
}

/// Caption plus the relations reported for the object's neighbors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionResult {
    #[serde(flatten)]
    pub caption: SemanticCaption,
    #[serde(default)]
    pub relations: Vec<ObservedRelation>,
}

impl CaptionResult {
    pub fn name_only(name: &str) -> Self {
        Self {
            caption: SemanticCaption::name_only(name),
            relations: Vec::new(),
        }
    }
}
