//! Quantile-curve export from a saved checkpoint.

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{BenchError, Result};
use cvarmix_core::checkpoint::Checkpoint;
use cvarmix_core::env::{EnvKind, Environment};
use cvarmix_core::learners::DrlVariant;
use cvarmix_core::risk::{quantile_curve, QuantileCurve};
use cvarmix_core::rng::{stream_rng, Stream};
use std::path::Path;

/// Fails unless `ckpt` is what `config.algorithm` produces on `env`.
pub fn check_compatible(config: &ExperimentConfig, env: &EnvKind, ckpt: &Checkpoint) -> Result<()> {
    let want = config.algorithm.checkpoint_kind();
    if ckpt.kind() != want {
        return Err(BenchError::Invalid(format!(
            "checkpoint holds a {} policy but algorithm {:?} expects {want}",
            ckpt.kind(),
            config.algorithm
        )));
    }
    if let Checkpoint::Quantile(agent) = ckpt {
        let tracking = matches!(agent.variant(), DrlVariant::Tracking(_));
        if tracking != (config.algorithm == Algorithm::DrlLim) {
            return Err(BenchError::Invalid(format!(
                "checkpoint quantile variant does not match algorithm {:?}",
                config.algorithm
            )));
        }
    }
    if ckpt.num_states() != env.num_states() || ckpt.num_actions() != env.num_actions() {
        return Err(BenchError::Invalid(format!(
            "checkpoint is sized for {} states x {} actions, environment has {} x {}",
            ckpt.num_states(),
            ckpt.num_actions(),
            env.num_states(),
            env.num_actions()
        )));
    }
    Ok(())
}

/// Rolls out `ckpt` for `episodes` episodes on the evaluation stream of `seed`.
pub fn rollout_curve(env: &EnvKind, ckpt: &Checkpoint, episodes: usize, seed: u64) -> Result<QuantileCurve> {
    if episodes == 0 {
        return Err(BenchError::Invalid("episodes must be positive".into()));
    }
    let mut env_rng = stream_rng(seed, Stream::Evaluation);
    let mut explore_rng = stream_rng(seed, Stream::Exploration);
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        returns.push(ckpt.rollout(env, &mut env_rng, &mut explore_rng)?.total_return);
    }
    Ok(quantile_curve(&returns)?)
}

/// Loads `checkpoint`, rolls it out with the config's first seed and writes
/// the `probability,value` CSV to `out`.
pub fn dump_quantile_curve(config: &ExperimentConfig, checkpoint: &Path, episodes: usize, out: &Path) -> Result<QuantileCurve> {
    let env = config.build_env()?;
    let ckpt = Checkpoint::load(checkpoint)?;
    check_compatible(config, &env, &ckpt)?;
    let curve = rollout_curve(&env, &ckpt, episodes, config.seeds[0])?;
    std::fs::write(out, curve.to_csv()).map_err(|e| BenchError::io(out, e))?;
    Ok(curve)
}
