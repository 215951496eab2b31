//! JSON run configuration. Every field except `schema_version` is optional;
//! omitted values fall back to the defaults of the reference setup
//! (`alpha = beta = 1`, temperatures 0.1, Adam 0.001/0.9/0.999/1e-8,
//! `tol = 1e-3`). Command-line flags override file values.

use std::path::{Path, PathBuf};

use mvcl_core::loss::DEFAULT_TEMPERATURE;
use mvcl_core::{AdamParams, BenchmarkConfig, HyperParams, PreprocessFlags, SplitPlan, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "temperature")]
    pub sigma1: f64,
    #[serde(default = "temperature")]
    pub sigma2: f64,
    #[serde(default = "temperature")]
    pub sigma3: f64,
    #[serde(default = "yes")]
    pub fea_include_self_view: bool,
    #[serde(default)]
    pub adam: AdamParams,
    #[serde(default = "max_iters")]
    pub max_iters: usize,
    #[serde(default = "tol")]
    pub tol: f64,
    /// Seeds both parameter initialization and the train/test splits.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub preprocess: PreprocessFlags,
    /// Training samples per class (`M`).
    #[serde(default)]
    pub per_class: Option<usize>,
    #[serde(default = "repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub d_sweep: Vec<usize>,
    #[serde(default)]
    pub paths: Paths,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(default)]
    pub views: Vec<PathBuf>,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn temperature() -> f64 {
    DEFAULT_TEMPERATURE
}
fn yes() -> bool {
    true
}
fn max_iters() -> usize {
    TrainConfig::DEFAULT_MAX_ITERS
}
fn tol() -> f64 {
    TrainConfig::DEFAULT_TOL
}
fn repeats() -> usize {
    5
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str(&format!("{{\"schema_version\": {}}}", CONFIG_SCHEMA_VERSION)).expect("defaults parse")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = io::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema_version {}", self.schema_version)));
        }
        let tc = self.train_config_unchecked(self.d.unwrap_or(1));
        tc.validate(&[]).map_err(|e| Error::Config(e.to_string()))?;
        for &d in &self.d_sweep {
            if d == 0 {
                return Err(Error::Config("d_sweep entries must be >= 1".into()));
            }
        }
        if let Some(m) = self.per_class {
            SplitPlan::new(m, self.repeats, self.seed).validate().map_err(|e| Error::Config(e.to_string()))?;
        } else if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        Ok(())
    }

    pub fn hyper_params(&self, d: usize) -> HyperParams {
        HyperParams {
            d,
            alpha: self.alpha,
            beta: self.beta,
            sigma1: self.sigma1,
            sigma2: self.sigma2,
            sigma3: self.sigma3,
            fea_include_self_view: self.fea_include_self_view,
        }
    }

    fn train_config_unchecked(&self, d: usize) -> TrainConfig {
        TrainConfig { max_iters: self.max_iters, tol: self.tol, seed: self.seed, adam: self.adam, hp: self.hyper_params(d) }
    }

    /// Training configuration; `d` must be set.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let d = self.d.ok_or_else(|| Error::Usage("subspace dimension d is required (--d or \"d\" in the config)".into()))?;
        Ok(self.train_config_unchecked(d))
    }

    /// An explicit `d_sweep` wins; otherwise a set `d` is a one-value sweep;
    /// otherwise the default grid is used.
    pub fn benchmark_config(&self) -> BenchmarkConfig {
        let d_sweep = match (self.d_sweep.is_empty(), self.d) {
            (true, Some(d)) => vec![d],
            _ => self.d_sweep.clone(),
        };
        let first = d_sweep.first().copied().unwrap_or(1);
        BenchmarkConfig { train: self.train_config_unchecked(first), preprocess: self.preprocess, d_sweep }
    }

    pub fn split_plan(&self) -> Result<SplitPlan> {
        let m = self.per_class.ok_or_else(|| Error::Usage("training samples per class is required (--M)".into()))?;
        Ok(SplitPlan::new(m, self.repeats, self.seed))
    }
}
