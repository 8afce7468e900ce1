//! Seeded multi-run orchestration.

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{BenchError, Result};
use crate::metrics::MetricsRow;
use cvarmix_core::env::{EnvKind, Environment};
use cvarmix_core::learners::{
    initial_mixture, precomputed_risk_neutral, CvarPgTrainer, DrlAgent, DrlSchedule, DrlTrainer, DrlVariant,
    IqlSettings, MixConfig, MixTrainer, ReinforceTrainer, Trainer,
};
use cvarmix_core::policy::SoftmaxPolicy;
use rayon::prelude::*;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub fn metrics_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.csv"))
}

pub fn checkpoint_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed_{seed}.ckpt"))
}

/// Builds the learner described by `config` for one seed.
pub fn build_trainer(config: &ExperimentConfig, env: &EnvKind, seed: u64) -> Result<Box<dyn Trainer + Send>> {
    let (ns, na) = (env.num_states(), env.num_actions());
    let n = config.batch_episodes;
    let schedule = config.schedule();
    let trainer: Box<dyn Trainer + Send> = match config.algorithm {
        Algorithm::Reinforce => Box::new(ReinforceTrainer::new(
            env.clone(),
            SoftmaxPolicy::zeros(ns, na),
            n,
            config.lr,
            config.lr_value(),
            seed,
        )?),
        Algorithm::CvarPg => Box::new(CvarPgTrainer::new(
            env.clone(),
            SoftmaxPolicy::zeros(ns, na),
            schedule,
            n,
            config.lr,
            seed,
        )?),
        Algorithm::MixPrecomputed | Algorithm::MixIql => {
            let iql = (config.algorithm == Algorithm::MixIql).then_some(IqlSettings {
                frequency: config.iql_frequency,
                sample_size: config.iql_sample_size,
                minibatch: config.iql_minibatch,
                lr: config.lr_iql,
                expectile: config.expectile,
                awr_temperature: config.awr_temperature,
                target_sync: config.iql_target_sync,
                buffer_capacity: config.buffer_capacity,
            });
            let rn = match iql {
                Some(_) => vec![1.0 / na as f64; ns * na],
                None => precomputed_risk_neutral(env, config.temperature)?,
            };
            let policy = initial_mixture(env, config.weight_mode.into(), rn)?;
            let mix = MixConfig { schedule, episodes: n, lr: config.lr, iql };
            Box::new(MixTrainer::new(env.clone(), policy, mix, seed)?)
        }
        Algorithm::DrlMkv | Algorithm::DrlLim => {
            let variant = match config.algorithm {
                Algorithm::DrlLim => DrlVariant::Tracking(config.k_grid()),
                _ => DrlVariant::Markov,
            };
            let mut agent = DrlAgent::new(
                variant,
                ns,
                na,
                config.quantiles,
                schedule.alpha_at(0),
                env.discount(),
                config.lr_quantile,
            )?;
            agent.set_k0(config.k0);
            let mut drl = DrlSchedule::standard(config.batches * n);
            drl.k0_refresh_batches = config.k0_refresh_batches;
            drl.k0_eval_episodes = config.k0_eval_episodes;
            Box::new(DrlTrainer::new(env.clone(), agent, schedule, drl, n, seed)?)
        }
    };
    Ok(trainer)
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| BenchError::io(path, e))
}

fn run_seed(config: &ExperimentConfig, env: &EnvKind, seed: u64, csv_file: File, dir: &Path) -> Result<()> {
    let started = Instant::now();
    let mut trainer = build_trainer(config, env, seed)?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(csv_file));
    // Written explicitly so a zero-batch run still has one.
    writer.write_record(crate::metrics::COLUMNS)?;
    for b in 0..config.batches {
        let report = trainer.train_batch(b)?;
        let wall = if config.record_wallclock { started.elapsed().as_secs_f64() } else { 0.0 };
        let row = MetricsRow::from_report(env, &report, b, config.alpha, wall)?;
        writer.serialize(&row)?;
    }
    writer.flush().map_err(|e| BenchError::io(metrics_path(dir, seed), e))?;
    trainer.checkpoint().save(&checkpoint_path(dir, seed))?;
    Ok(())
}

/// Trains every seed in `config.seeds` (concurrently) and writes
/// `seed_<n>.csv` and `seed_<n>.ckpt` into `out_dir`. All output files are
/// created before any training starts, so an unwritable directory fails fast.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let env = config.build_env()?;
    std::fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
    let mut jobs = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let file = create(&metrics_path(out_dir, seed))?;
        create(&checkpoint_path(out_dir, seed))?;
        jobs.push((seed, file));
    }
    jobs.into_par_iter()
        .map(|(seed, file)| run_seed(config, &env, seed, file, out_dir))
        .collect::<Result<Vec<()>>>()?;
    Ok(config.seeds.iter().map(|&s| metrics_path(out_dir, s)).collect())
}
