//! JSON experiment configuration.

use crate::error::{BenchError, Result};
use cvarmix_core::env::{EnvKind, Maze, MazeSpec, RiskyBandit};
use cvarmix_core::learners::{AlphaSchedule, KGrid, DEFAULT_ALPHA_START, DEFAULT_QUANTILES};
use cvarmix_core::policy::WeightMode;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    Maze,
    RiskyBandit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MazeLayout {
    #[default]
    Ring,
    CentralCorridor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Reinforce,
    CvarPg,
    MixPrecomputed,
    MixIql,
    DrlMkv,
    DrlLim,
}

impl Algorithm {
    /// Checkpoint kind written by this algorithm.
    pub fn checkpoint_kind(self) -> &'static str {
        match self {
            Algorithm::Reinforce | Algorithm::CvarPg => "softmax",
            Algorithm::MixPrecomputed | Algorithm::MixIql => "mixture",
            Algorithm::DrlMkv | Algorithm::DrlLim => "quantile",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightModeName {
    #[default]
    PerAction,
    PerState,
}

impl From<WeightModeName> for WeightMode {
    fn from(w: WeightModeName) -> Self {
        match w {
            WeightModeName::PerAction => WeightMode::PerAction,
            WeightModeName::PerState => WeightMode::PerState,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumConfig {
    #[serde(default = "default_alpha_start")]
    pub alpha_start: f64,
    pub anneal_batches: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGridConfig {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Default for KGridConfig {
    fn default() -> Self {
        let g = KGrid::default();
        Self { lo: g.lo, hi: g.hi, bins: g.bins }
    }
}

fn default_alpha_start() -> f64 {
    DEFAULT_ALPHA_START
}
fn default_alpha() -> f64 {
    0.1
}
fn default_batch_episodes() -> usize {
    50
}
fn default_iql_frequency() -> usize {
    5
}
fn default_lr() -> f64 {
    1e-2
}
fn default_lr_iql() -> f64 {
    0.1
}
fn default_lr_quantile() -> f64 {
    0.05
}
fn default_expectile() -> f64 {
    0.8
}
fn default_awr_temperature() -> f64 {
    1.0
}
fn default_temperature() -> f64 {
    0.05
}
fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}
fn default_iql_sample_size() -> usize {
    20_000
}
fn default_iql_minibatch() -> usize {
    256
}
fn default_target_sync() -> usize {
    10
}
fn default_quantiles() -> usize {
    DEFAULT_QUANTILES
}
fn default_k0_refresh() -> usize {
    50
}
fn default_k0_eval() -> usize {
    200
}
fn default_buffer_capacity() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvName,
    #[serde(default)]
    pub maze_layout: MazeLayout,
    pub algorithm: Algorithm,
    /// Target risk level.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_batch_episodes")]
    pub batch_episodes: usize,
    pub batches: usize,
    #[serde(default = "default_iql_frequency")]
    pub iql_frequency: usize,
    /// Policy learning rate.
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// Baseline learning rate for REINFORCE; 10 x `lr` when absent.
    #[serde(default)]
    pub lr_value: Option<f64>,
    #[serde(default = "default_lr_iql")]
    pub lr_iql: f64,
    #[serde(default = "default_lr_quantile")]
    pub lr_quantile: f64,
    #[serde(default = "default_expectile")]
    pub expectile: f64,
    #[serde(default = "default_awr_temperature")]
    pub awr_temperature: f64,
    /// Softmax temperature of the precomputed risk-neutral policy.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Discount; the environment's own value (0.999 maze, 1 bandit) when absent.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub curriculum: Option<CurriculumConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub weight_mode: WeightModeName,
    #[serde(default = "default_iql_sample_size")]
    pub iql_sample_size: usize,
    #[serde(default = "default_iql_minibatch")]
    pub iql_minibatch: usize,
    #[serde(default = "default_target_sync")]
    pub iql_target_sync: usize,
    #[serde(default = "default_buffer_capacity")]
    pub buffer_capacity: usize,
    #[serde(default = "default_quantiles")]
    pub quantiles: usize,
    #[serde(default)]
    pub k_grid: KGridConfig,
    /// Initial tracking value for drl_lim.
    #[serde(default)]
    pub k0: f64,
    #[serde(default = "default_k0_refresh")]
    pub k0_refresh_batches: usize,
    #[serde(default = "default_k0_eval")]
    pub k0_eval_episodes: usize,
    /// Write real elapsed time to the metrics; off by default so outputs are
    /// byte-reproducible.
    #[serde(default)]
    pub record_wallclock: bool,
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        BenchError::config(path, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(BenchError::config(key, format!("must be a positive number, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(BenchError::config("alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if self.batch_episodes == 0 {
            return Err(BenchError::config("batch_episodes", "must be positive"));
        }
        if (self.batch_episodes as f64) * self.alpha < 1.0 - 1e-9 {
            return Err(BenchError::config(
                "batch_episodes",
                format!("batch_episodes * alpha must be at least 1, got {}", self.batch_episodes as f64 * self.alpha),
            ));
        }
        for (key, v) in [
            ("lr", self.lr),
            ("lr_iql", self.lr_iql),
            ("lr_quantile", self.lr_quantile),
            ("temperature", self.temperature),
        ] {
            positive(key, v)?;
        }
        if let Some(v) = self.lr_value {
            positive("lr_value", v)?;
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(BenchError::config("gamma", format!("must lie in (0, 1], got {g}")));
            }
        }
        if !(self.expectile > 0.0 && self.expectile < 1.0) {
            return Err(BenchError::config("expectile", format!("must lie in (0, 1), got {}", self.expectile)));
        }
        if self.awr_temperature.is_nan() || self.awr_temperature < 0.0 {
            return Err(BenchError::config("awr_temperature", "must be nonnegative"));
        }
        for (key, v) in [
            ("iql_frequency", self.iql_frequency),
            ("iql_sample_size", self.iql_sample_size),
            ("iql_minibatch", self.iql_minibatch),
            ("iql_target_sync", self.iql_target_sync),
            ("buffer_capacity", self.buffer_capacity),
            ("quantiles", self.quantiles),
        ] {
            if v == 0 {
                return Err(BenchError::config(key, "must be positive"));
            }
        }
        if self.seeds.is_empty() {
            return Err(BenchError::config("seeds", "needs at least one seed"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(BenchError::config("seeds", "seeds must be distinct"));
        }
        if let Some(c) = &self.curriculum {
            AlphaSchedule::new(c.alpha_start, self.alpha, c.anneal_batches)
                .map_err(|e| BenchError::config("curriculum.alpha_start", e.to_string()))?;
        }
        KGrid::new(self.k_grid.lo, self.k_grid.hi, self.k_grid.bins)
            .map_err(|e| BenchError::config("k_grid", e.to_string()))?;
        Ok(())
    }

    pub fn schedule(&self) -> AlphaSchedule {
        match &self.curriculum {
            Some(c) => AlphaSchedule {
                alpha_start: c.alpha_start,
                alpha_target: self.alpha,
                anneal_batches: c.anneal_batches,
            },
            None => AlphaSchedule::constant(self.alpha),
        }
    }

    pub fn lr_value(&self) -> f64 {
        self.lr_value.unwrap_or(10.0 * self.lr)
    }

    pub fn k_grid(&self) -> KGrid {
        KGrid { lo: self.k_grid.lo, hi: self.k_grid.hi, bins: self.k_grid.bins }
    }

    pub fn build_env(&self) -> Result<EnvKind> {
        match self.env {
            EnvName::Maze => {
                let base = match self.maze_layout {
                    MazeLayout::Ring => Maze::canonical(),
                    MazeLayout::CentralCorridor => Maze::central_corridor(),
                };
                let mut spec: MazeSpec = base.spec().clone();
                if let Some(g) = self.gamma {
                    spec.discount = g;
                }
                Ok(EnvKind::Maze(Maze::new(spec)?))
            }
            EnvName::RiskyBandit => {
                if self.gamma.is_some_and(|g| g != 1.0) {
                    return Err(BenchError::config("gamma", "the bandit is undiscounted"));
                }
                Ok(EnvKind::Bandit(RiskyBandit::new()))
            }
        }
    }
}
