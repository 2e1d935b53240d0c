//! Effective configuration: built-in defaults, then an optional TOML file,
//! then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use dsm_core::config::{Backend, PipelineConfig};

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file with any subset of the pipeline settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Model backend for captioning and reasoning.
    #[arg(long, global = true, value_parser = parse_backend)]
    pub backend: Option<Backend>,
    /// Seed for every randomized step, including query generation.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_depth: Option<f64>,
    #[arg(long, global = true)]
    pub window_len: Option<usize>,
    #[arg(long, global = true)]
    pub mc_samples: Option<usize>,
    #[arg(long, global = true)]
    pub t_v: Option<f64>,
    #[arg(long, global = true)]
    pub t_x: Option<f64>,
    #[arg(long, global = true)]
    pub t_g: Option<f64>,
    #[arg(long, global = true)]
    pub total_threshold: Option<f64>,
    /// Relation sentences kept by the latent-relation filter.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub no_relation_filter: bool,
    /// Leave appearance, physical and affordance text out of grounding.
    #[arg(long, global = true)]
    pub no_attributes: bool,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse().map_err(|e: dsm_core::config::ConfigError| e.to_string())
}

pub fn read_config_file(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => read_config_file(p)?,
            None => PipelineConfig::default(),
        };
        self.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.querygen.seed = s;
        }
        if let Some(v) = self.max_depth {
            cfg.max_depth = v;
        }
        if let Some(v) = self.window_len {
            cfg.window.window_len = v;
        }
        if let Some(v) = self.mc_samples {
            cfg.window.mc_samples = v;
        }
        let f = &mut cfg.fusion;
        for (slot, v) in [
            (&mut f.t_v, self.t_v),
            (&mut f.t_x, self.t_x),
            (&mut f.t_g, self.t_g),
            (&mut f.total_threshold, self.total_threshold),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(k) = self.k {
            cfg.grounding.k = k;
        }
        if self.no_relation_filter {
            cfg.grounding.use_relation_filter = false;
        }
        if self.no_attributes {
            cfg.grounding = cfg.grounding.clone().without_attributes();
        }
    }
}
