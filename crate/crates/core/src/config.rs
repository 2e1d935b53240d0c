//! Parameter sets for every stage. All structs deserialize with per-field
//! defaults, so a config file only needs the values it overrides.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("invalid config: {0}")]
pub struct ConfigError(pub String);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(msg()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub t_v: f64,
    pub t_x: f64,
    pub t_g: f64,
    pub total_threshold: f64,
    pub s_g0: f64,
    /// Slack, in meters, allowed when testing box containment.
    pub containment_margin: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            t_v: 0.4,
            t_x: 0.8,
            t_g: 0.3,
            total_threshold: 1.5,
            s_g0: 1.0,
            containment_margin: 0.02,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (n, v) in [
            ("t_v", self.t_v),
            ("t_x", self.t_x),
            ("t_g", self.t_g),
            ("total_threshold", self.total_threshold),
        ] {
            check((0.0..=3.0).contains(&v), || format!("fusion.{n} = {v} outside [0, 3]"))?;
        }
        check((0.0..=1.0).contains(&self.s_g0), || {
            format!("fusion.s_g0 = {} outside [0, 1]", self.s_g0)
        })?;
        check(self.containment_margin >= 0.0 && self.containment_margin.is_finite(), || {
            format!("fusion.containment_margin = {} must be non-negative", self.containment_margin)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub window_len: usize,
    pub mc_samples: usize,
    pub r_in: f64,
    pub r_out: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_len: 5,
            mc_samples: 512,
            r_in: 1.0,
            r_out: 1.0,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.window_len >= 1, || "window.window_len must be at least 1".into())?;
        check(self.mc_samples >= 32, || "window.mc_samples must be at least 32".into())?;
        check(self.r_in > 0.0 && self.r_out > 0.0, || {
            "window.r_in and window.r_out must be positive".into()
        })
    }
}

/// Mean and spread of one attribute-inclusion gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for Gate {
    fn default() -> Self {
        Self { mu: 0.5, sigma: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueryGenConfig {
    pub appearance: Gate,
    pub physical: Gate,
    pub affordance: Gate,
    pub gate_cutoff: f64,
    pub n_unique: usize,
    pub n_multiple: usize,
    pub seed: u64,
}

impl Default for QueryGenConfig {
    fn default() -> Self {
        Self {
            appearance: Gate::default(),
            physical: Gate::default(),
            affordance: Gate::default(),
            gate_cutoff: 0.5,
            n_unique: 10,
            n_multiple: 30,
            seed: 0,
        }
    }
}

impl QueryGenConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (n, g) in [
            ("appearance", self.appearance),
            ("physical", self.physical),
            ("affordance", self.affordance),
        ] {
            check(g.sigma >= 0.0 && g.sigma.is_finite() && g.mu.is_finite(), || {
                format!("querygen.{n}: sigma must be finite and non-negative")
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Mock,
    Remote,
}

impl std::str::FromStr for Backend {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(Self::Mock),
            "remote" => Ok(Self::Remote),
            _ => Err(ConfigError(format!("unknown backend '{s}' (expected mock or remote)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub vfov_deg: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 768,
            height: 768,
            vfov_deg: 60.0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.width >= 8 && self.height >= 8, || "render size must be at least 8x8".into())?;
        check(self.vfov_deg > 1.0 && self.vfov_deg < 170.0, || {
            format!("render.vfov_deg = {} outside (1, 170)", self.vfov_deg)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundingConfig {
    /// Number of relation sentences kept by the latent-relation filter.
    pub k: usize,
    pub use_relation_filter: bool,
    pub use_appearance: bool,
    pub use_physical: bool,
    pub use_affordance: bool,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        Self {
            k: 3,
            use_relation_filter: true,
            use_appearance: true,
            use_physical: true,
            use_affordance: true,
        }
    }
}

impl GroundingConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.k >= 1, || "grounding.k must be at least 1".into())
    }

    /// Same settings with every attribute text disabled.
    pub fn without_attributes(mut self) -> Self {
        self.use_appearance = false;
        self.use_physical = false;
        self.use_affordance = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub fusion: FusionConfig,
    pub window: WindowConfig,
    pub querygen: QueryGenConfig,
    pub grounding: GroundingConfig,
    pub render: RenderConfig,
    pub backend: Backend,
    /// Depth beyond this many meters is dropped during unprojection.
    pub max_depth: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fusion: FusionConfig::default(),
            window: WindowConfig::default(),
            querygen: QueryGenConfig::default(),
            grounding: GroundingConfig::default(),
            render: RenderConfig::default(),
            backend: Backend::Mock,
            max_depth: crate::ingest::DEFAULT_MAX_DEPTH,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.fusion.validate()?;
        self.window.validate()?;
        self.querygen.validate()?;
        self.grounding.validate()?;
        self.render.validate()?;
        check(self.max_depth > 0.0, || "max_depth must be positive".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: PipelineConfig = serde_json::from_str(r#"{"fusion": {"t_v": 0.5}, "seed": 9}"#).unwrap();
        assert_eq!(c.fusion.t_v, 0.5);
        assert_eq!(c.fusion.t_x, 0.8);
        assert_eq!(c.window.window_len, 5);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let mut c = PipelineConfig::default();
        c.fusion.s_g0 = 1.5;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.window.mc_samples = 4;
        assert!(c.validate().is_err());
        assert!("gpu".parse::<Backend>().is_err());
    }
}
