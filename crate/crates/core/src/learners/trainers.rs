use super::cvar_pg::cvar_pg_update;
use super::distributional::{DrlAgent, DrlVariant};
use super::reinforce::reinforce_update;
use super::schedule::{AlphaSchedule, LinearDecay};
use crate::checkpoint::Checkpoint;
use crate::env::{run_episode, EnvKind, Environment, Trajectory};
use crate::error::{Error, Result};
use crate::policy::{Policy, SoftmaxPolicy};
use crate::risk::empirical_cvar;
use crate::rng::Streams;
use rand::Rng;

/// Output of one training batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    pub trajectories: Vec<Trajectory>,
    /// Norm of the policy gradient; NaN for learners without one.
    pub grad_norm: f64,
    pub alpha: f64,
}

pub trait Trainer {
    /// Collects one batch of episodes and applies the learner's update.
    fn train_batch(&mut self, batch_index: usize) -> Result<BatchReport>;
    fn checkpoint(&self) -> Checkpoint;
}

pub fn rollout_batch<P, R>(env: &EnvKind, policy: &P, episodes: usize, rng: &mut R) -> Result<Vec<Trajectory>>
where
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    (0..episodes).map(|_| run_episode(env, policy, rng)).collect()
}

fn check_batch(episodes: usize, lr: f64) -> Result<()> {
    if episodes == 0 {
        return Err(Error::contract("batch must contain at least one episode"));
    }
    if !(lr > 0.0) {
        return Err(Error::contract(format!("learning rate must be positive, got {lr}")));
    }
    Ok(())
}

/// CVaR policy gradient on a tabular softmax policy.
#[derive(Debug, Clone)]
pub struct CvarPgTrainer {
    env: EnvKind,
    policy: SoftmaxPolicy,
    schedule: AlphaSchedule,
    episodes: usize,
    lr: f64,
    streams: Streams,
}

impl CvarPgTrainer {
    pub fn new(env: EnvKind, policy: SoftmaxPolicy, schedule: AlphaSchedule, episodes: usize, lr: f64, seed: u64) -> Result<Self> {
        check_batch(episodes, lr)?;
        Ok(Self { env, policy, schedule, episodes, lr, streams: Streams::new(seed) })
    }

    pub fn policy(&self) -> &SoftmaxPolicy {
        &self.policy
    }
}

impl Trainer for CvarPgTrainer {
    fn train_batch(&mut self, batch_index: usize) -> Result<BatchReport> {
        let alpha = self.schedule.alpha_at(batch_index);
        let trajectories = rollout_batch(&self.env, &self.policy, self.episodes, &mut self.streams.rollout)?;
        let grad_norm = cvar_pg_update(&trajectories, &mut self.policy, alpha, self.lr)?;
        Ok(BatchReport { trajectories, grad_norm, alpha })
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::Softmax(self.policy.clone())
    }
}

/// REINFORCE with a tabular value baseline on a softmax policy.
#[derive(Debug, Clone)]
pub struct ReinforceTrainer {
    env: EnvKind,
    policy: SoftmaxPolicy,
    baseline: Vec<f64>,
    episodes: usize,
    lr_policy: f64,
    lr_value: f64,
    streams: Streams,
}

impl ReinforceTrainer {
    pub fn new(env: EnvKind, policy: SoftmaxPolicy, episodes: usize, lr_policy: f64, lr_value: f64, seed: u64) -> Result<Self> {
        check_batch(episodes, lr_policy)?;
        check_batch(episodes, lr_value)?;
        let baseline = vec![0.0; env.num_states()];
        Ok(Self { env, policy, baseline, episodes, lr_policy, lr_value, streams: Streams::new(seed) })
    }

    pub fn policy(&self) -> &SoftmaxPolicy {
        &self.policy
    }

    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }
}

impl Trainer for ReinforceTrainer {
    fn train_batch(&mut self, _batch_index: usize) -> Result<BatchReport> {
        let trajectories = rollout_batch(&self.env, &self.policy, self.episodes, &mut self.streams.rollout)?;
        let gamma = self.env.discount();
        let grad_norm = reinforce_update(
            &trajectories,
            &mut self.policy,
            &mut self.baseline,
            gamma,
            self.lr_policy,
            self.lr_value,
        )?;
        Ok(BatchReport { trajectories, grad_norm, alpha: 1.0 })
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::Softmax(self.policy.clone())
    }
}

/// Exploration and tracking-variable settings of the distributional trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrlSchedule {
    pub epsilon: LinearDecay,
    /// Re-estimate `k0` every this many batches (tracking variant only).
    pub k0_refresh_batches: usize,
    pub k0_eval_episodes: usize,
}

impl DrlSchedule {
    /// Epsilon 1.0 to 0.05 over the first half of `total_episodes`; `k0` refreshed
    /// every 50 batches from 200 greedy episodes.
    pub fn standard(total_episodes: usize) -> Self {
        Self {
            epsilon: LinearDecay { start: 1.0, end: 0.05, steps: total_episodes / 2 },
            k0_refresh_batches: 50,
            k0_eval_episodes: 200,
        }
    }
}

/// Online distributional learner; every environment step triggers one backup.
#[derive(Debug, Clone)]
pub struct DrlTrainer {
    env: EnvKind,
    agent: DrlAgent,
    schedule: AlphaSchedule,
    drl: DrlSchedule,
    episodes: usize,
    episodes_done: usize,
    streams: Streams,
}

impl DrlTrainer {
    pub fn new(env: EnvKind, agent: DrlAgent, schedule: AlphaSchedule, drl: DrlSchedule, episodes: usize, seed: u64) -> Result<Self> {
        check_batch(episodes, 1.0)?;
        Ok(Self { env, agent, schedule, drl, episodes, episodes_done: 0, streams: Streams::new(seed) })
    }

    pub fn agent(&self) -> &DrlAgent {
        &self.agent
    }

    /// Sets `k0` to the empirical CVaR of greedy evaluation returns.
    pub fn refresh_k0(&mut self) -> Result<f64> {
        let mut returns = Vec::with_capacity(self.drl.k0_eval_episodes);
        for _ in 0..self.drl.k0_eval_episodes {
            let t = self.agent.rollout(&self.env, 0.0, &mut self.streams.evaluation, &mut self.streams.exploration)?;
            returns.push(t.total_return);
        }
        let k0 = empirical_cvar(&returns, self.agent.alpha())?;
        self.agent.set_k0(k0);
        Ok(self.agent.k0())
    }
}

impl Trainer for DrlTrainer {
    fn train_batch(&mut self, batch_index: usize) -> Result<BatchReport> {
        let alpha = self.schedule.alpha_at(batch_index);
        self.agent.set_alpha(alpha);
        let refresh = self.drl.k0_refresh_batches;
        if matches!(self.agent.variant(), DrlVariant::Tracking(_))
            && refresh > 0
            && batch_index > 0
            && batch_index.is_multiple_of(refresh)
        {
            self.refresh_k0()?;
        }
        let mut trajectories = Vec::with_capacity(self.episodes);
        for _ in 0..self.episodes {
            let eps = self.drl.epsilon.value_at(self.episodes_done);
            let t = self.agent.run_episode(
                &self.env,
                eps,
                &mut self.streams.rollout,
                &mut self.streams.exploration,
                |_, _| {},
            )?;
            self.episodes_done += 1;
            trajectories.push(t);
        }
        Ok(BatchReport { trajectories, grad_norm: f64::NAN, alpha })
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::Quantile(self.agent.clone())
    }
}
