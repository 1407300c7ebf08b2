//! The full configuration tree read from JSON config files.
//!
//! Every section defaults field by field, so a file only needs the values it
//! changes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::landscape::DEFAULT_SGS_EPS;
use crate::learning::{Env, LearnerConfig};
use crate::viability::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    #[default]
    Viable,
    Feasible,
}

/// Landscape settings. Axes are derived from the reference fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LandscapeConfig {
    /// Points per parameter axis.
    pub count: usize,
    pub n_rollouts: usize,
    pub reward_cap: f64,
    pub max_steps: usize,
    pub sgs_eps: f64,
    /// Exploration level, degrees, read through the learner's scale.
    pub sigma_level_deg: f64,
    pub strategy: StrategyKind,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self {
            count: 61,
            n_rollouts: 100,
            reward_cap: 1.0,
            max_steps: 50,
            sgs_eps: DEFAULT_SGS_EPS,
            sigma_level_deg: 8.0,
            strategy: StrategyKind::Viable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Master seed for every random stream.
    pub seed: u64,
    pub env: Env<f64>,
    pub grid: GridSpec<f64>,
    pub learner: LearnerConfig,
    pub landscape: LandscapeConfig,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2018,
            env: Env::default(),
            grid: GridSpec::default(),
            learner: LearnerConfig::default(),
            landscape: LandscapeConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.grid.validate()?;
        if self.grid.actions() != self.env.actions {
            return Err(Error::Config("grid angle range must equal the admissible action range".into()));
        }
        self.learner.validate()?;
        let l = &self.landscape;
        if l.count < 2 || l.n_rollouts == 0 || l.max_steps == 0 || !(l.sigma_level_deg > 0.0) || !(l.sgs_eps >= 0.0) {
            return Err(Error::Config("landscape needs count >= 2, rollouts and steps >= 1, positive sigma".into()));
        }
        self.experiment.validate()
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is always serializable")
    }
}
