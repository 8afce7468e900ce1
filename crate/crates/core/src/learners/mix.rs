use super::buffer::{ReplayBuffer, DEFAULT_CAPACITY};
use super::cvar_pg::cvar_pg_update;
use super::iql::IqlTables;
use super::schedule::AlphaSchedule;
use super::trainers::{rollout_batch, BatchReport, Trainer};
use crate::checkpoint::Checkpoint;
use crate::env::{EnvKind, Environment};
use crate::error::{Error, Result};
use crate::policy::{risk_neutral_from_q, value_iteration, MixturePolicy, WeightMode};
use crate::rng::Streams;

/// Offline risk-neutral learning inside the mixture trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqlSettings {
    /// Run IQL after every `frequency` batches.
    pub frequency: usize,
    /// Transitions drawn from the buffer per trigger.
    pub sample_size: usize,
    /// The sample is consumed in minibatches of this size, one IQL pass each.
    pub minibatch: usize,
    pub lr: f64,
    pub expectile: f64,
    pub awr_temperature: f64,
    pub target_sync: usize,
    pub buffer_capacity: usize,
}

impl Default for IqlSettings {
    fn default() -> Self {
        Self {
            frequency: 5,
            sample_size: 20_000,
            minibatch: 256,
            lr: 0.1,
            expectile: 0.8,
            awr_temperature: 1.0,
            target_sync: super::iql::DEFAULT_TARGET_SYNC,
            buffer_capacity: DEFAULT_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixConfig {
    pub schedule: AlphaSchedule,
    pub episodes: usize,
    pub lr: f64,
    /// `None` keeps the risk-neutral component frozen.
    pub iql: Option<IqlSettings>,
}

/// Risk-neutral table from value iteration on the environment model followed by
/// a temperature softmax.
pub fn precomputed_risk_neutral(env: &impl Environment, temperature: f64) -> Result<Vec<f64>> {
    let model = env.model()?;
    let q = value_iteration(&model, env.discount(), 1e-10)?;
    risk_neutral_from_q(&q, temperature)
}

/// Zero-initialized mixture with the given risk-neutral table.
pub fn initial_mixture(env: &impl Environment, mode: WeightMode, risk_neutral: Vec<f64>) -> Result<MixturePolicy> {
    MixturePolicy::new(env.num_states(), env.num_actions(), mode, risk_neutral)
}

struct IqlState {
    settings: IqlSettings,
    tables: IqlTables,
    buffer: ReplayBuffer,
}

/// CVaR policy gradient on the mixture policy, optionally learning the
/// risk-neutral component with tabular IQL from a replay buffer.
pub struct MixTrainer {
    env: EnvKind,
    policy: MixturePolicy,
    config: MixConfig,
    iql: Option<IqlState>,
    streams: Streams,
}

impl MixTrainer {
    /// With IQL enabled the policy's risk-neutral table is replaced by the
    /// (uniform) initial IQL policy.
    pub fn new(env: EnvKind, mut policy: MixturePolicy, config: MixConfig, seed: u64) -> Result<Self> {
        if config.episodes == 0 || !(config.lr > 0.0) {
            return Err(Error::contract("mixture trainer needs episodes > 0 and lr > 0"));
        }
        let streams = Streams::new(seed);
        let iql = match config.iql {
            None => None,
            Some(settings) => {
                if settings.frequency == 0 || settings.minibatch == 0 || !(settings.lr > 0.0) {
                    return Err(Error::contract("IQL needs frequency, minibatch and lr > 0"));
                }
                let tables = IqlTables::new(
                    env.num_states(),
                    env.num_actions(),
                    settings.expectile,
                    settings.awr_temperature,
                )?
                .with_target_sync(settings.target_sync);
                policy.set_risk_neutral(tables.policy_table())?;
                let buffer = ReplayBuffer::new(settings.buffer_capacity.max(1), streams.buffer.clone());
                Some(IqlState { settings, tables, buffer })
            }
        };
        Ok(Self { env, policy, config, iql, streams })
    }

    pub fn policy(&self) -> &MixturePolicy {
        &self.policy
    }

    pub fn iql_tables(&self) -> Option<&IqlTables> {
        self.iql.as_ref().map(|s| &s.tables)
    }

    fn run_iql(&mut self) -> Result<()> {
        let gamma = self.env.discount();
        let Some(state) = self.iql.as_mut() else {
            return Ok(());
        };
        let sample = state.buffer.sample(state.settings.sample_size);
        for chunk in sample.chunks(state.settings.minibatch) {
            state.tables.iql_update(chunk, gamma, state.settings.lr)?;
        }
        let table = state.tables.policy_table();
        self.policy.set_risk_neutral(table)
    }
}

impl Trainer for MixTrainer {
    fn train_batch(&mut self, batch_index: usize) -> Result<BatchReport> {
        let alpha = self.config.schedule.alpha_at(batch_index);
        let trajectories = rollout_batch(&self.env, &self.policy, self.config.episodes, &mut self.streams.rollout)?;
        if let Some(state) = self.iql.as_mut() {
            for t in &trajectories {
                state.buffer.extend(t.transitions.iter().copied());
            }
        }
        let grad_norm = cvar_pg_update(&trajectories, &mut self.policy, alpha, self.config.lr)?;
        let trigger = self.iql.as_ref().is_some_and(|s| (batch_index + 1).is_multiple_of(s.settings.frequency));
        if trigger {
            self.run_iql()?;
        }
        Ok(BatchReport { trajectories, grad_norm, alpha })
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::Mixture(self.policy.clone())
    }
}

/// Runs `batches` mixture batches from `initial`; `batches = 0` returns it unchanged.
pub fn mix_train(
    env: &EnvKind,
    initial: MixturePolicy,
    config: &MixConfig,
    batches: usize,
    seed: u64,
) -> Result<(MixturePolicy, Vec<BatchReport>)> {
    let mut trainer = MixTrainer::new(env.clone(), initial, config.clone(), seed)?;
    let mut reports = Vec::with_capacity(batches);
    for b in 0..batches {
        reports.push(trainer.train_batch(b)?);
    }
    Ok((trainer.policy, reports))
}
