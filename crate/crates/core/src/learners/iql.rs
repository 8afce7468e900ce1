use crate::env::Transition;
use crate::error::{Error, Result};
use crate::policy::{argmax, softmax, softmax_into};

pub const AWR_EXPONENT_CLIP: f64 = 5.0;
pub const DEFAULT_TARGET_SYNC: usize = 10;

/// Tabular Implicit Q-Learning state.
///
/// Every update averages the per-sample gradient over the samples that touch each
/// table entry, then takes one step of size `lr` on that entry.
#[derive(Debug, Clone, PartialEq)]
pub struct IqlTables {
    num_states: usize,
    num_actions: usize,
    q: Vec<f64>,
    target_q: Vec<f64>,
    v: Vec<f64>,
    logits: Vec<f64>,
    expectile: f64,
    awr_temperature: f64,
    target_sync: usize,
    updates: usize,
}

impl IqlTables {
    pub fn new(num_states: usize, num_actions: usize, expectile: f64, awr_temperature: f64) -> Result<Self> {
        if !(expectile > 0.0 && expectile < 1.0) {
            return Err(Error::contract(format!("expectile must lie in (0, 1), got {expectile}")));
        }
        if !(awr_temperature >= 0.0) {
            return Err(Error::contract(format!(
                "AWR temperature must be nonnegative, got {awr_temperature}"
            )));
        }
        let dim = num_states * num_actions;
        Ok(Self {
            num_states,
            num_actions,
            q: vec![0.0; dim],
            target_q: vec![0.0; dim],
            v: vec![0.0; num_states],
            logits: vec![0.0; dim],
            expectile,
            awr_temperature,
            target_sync: DEFAULT_TARGET_SYNC,
            updates: 0,
        })
    }

    pub fn with_target_sync(mut self, every: usize) -> Self {
        self.target_sync = every.max(1);
        self
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn idx(&self, s: usize, a: usize) -> usize {
        s * self.num_actions + a
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn target_q(&self) -> &[f64] {
        &self.target_q
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn expectile(&self) -> f64 {
        self.expectile
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn set_target_q(&mut self, state: usize, action: usize, value: f64) {
        let i = self.idx(state, action);
        self.target_q[i] = value;
    }

    pub fn set_v(&mut self, state: usize, value: f64) {
        self.v[state] = value;
    }

    fn check(&self, batch: &[Transition]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::contract("IQL update needs a nonempty sample"));
        }
        for t in batch {
            if t.state >= self.num_states || t.next_state >= self.num_states || t.action >= self.num_actions {
                return Err(Error::contract(format!(
                    "transition ({}, {}, {}) outside the table",
                    t.state, t.action, t.next_state
                )));
            }
        }
        Ok(())
    }

    /// Squared-loss step of `Q(s,a)` toward `r + gamma V(s')` (`r` at terminals).
    pub fn update_q(&mut self, batch: &[Transition], gamma: f64, lr: f64) -> Result<()> {
        self.check(batch)?;
        let mut step = vec![0.0; self.q.len()];
        let mut count = vec![0u32; self.q.len()];
        for t in batch {
            let i = self.idx(t.state, t.action);
            let target = if t.bootstraps() { t.reward + gamma * self.v[t.next_state] } else { t.reward };
            step[i] += target - self.q[i];
            count[i] += 1;
        }
        for ((q, s), c) in self.q.iter_mut().zip(step).zip(count) {
            if c > 0 {
                *q += lr * s / c as f64;
            }
        }
        Ok(())
    }

    /// Expectile step of `V(s)` toward `target_q(s,a)` under `|eta - 1{u<0}| u^2`.
    pub fn update_v(&mut self, batch: &[Transition], lr: f64) -> Result<()> {
        self.check(batch)?;
        let mut step = vec![0.0; self.v.len()];
        let mut count = vec![0u32; self.v.len()];
        for t in batch {
            let u = self.target_q[self.idx(t.state, t.action)] - self.v[t.state];
            let w = if u < 0.0 { 1.0 - self.expectile } else { self.expectile };
            step[t.state] += w * u;
            count[t.state] += 1;
        }
        for ((v, s), c) in self.v.iter_mut().zip(step).zip(count) {
            if c > 0 {
                *v += lr * s / c as f64;
            }
        }
        Ok(())
    }

    /// Advantage-weighted ascent on `log pi(a|s)` with weight
    /// `exp(min(beta (Q(s,a) - V(s)), 5))`.
    pub fn update_policy(&mut self, batch: &[Transition], lr: f64) -> Result<()> {
        self.check(batch)?;
        let na = self.num_actions;
        let mut step = vec![0.0; self.logits.len()];
        let mut count = vec![0u32; self.num_states];
        let mut probs = vec![0.0; na];
        for t in batch {
            let s = t.state;
            softmax_into(&self.logits[s * na..(s + 1) * na], &mut probs);
            let adv = self.target_q[self.idx(s, t.action)] - self.v[s];
            let weight = (self.awr_temperature * adv).min(AWR_EXPONENT_CLIP).exp();
            for (b, p) in probs.iter().enumerate() {
                let indicator = if b == t.action { 1.0 } else { 0.0 };
                step[s * na + b] += weight * (indicator - p);
            }
            count[s] += 1;
        }
        for s in 0..self.num_states {
            if count[s] > 0 {
                for b in 0..na {
                    self.logits[s * na + b] += lr * step[s * na + b] / count[s] as f64;
                }
            }
        }
        Ok(())
    }

    /// One IQL pass on `batch`: Q, then V, then policy; syncs the target every
    /// `target_sync` passes.
    pub fn iql_update(&mut self, batch: &[Transition], gamma: f64, lr: f64) -> Result<()> {
        self.update_q(batch, gamma, lr)?;
        self.update_v(batch, lr)?;
        self.update_policy(batch, lr)?;
        self.updates += 1;
        if self.updates.is_multiple_of(self.target_sync) {
            self.target_q.copy_from_slice(&self.q);
        }
        Ok(())
    }

    /// Row-major softmax of the policy logits.
    pub fn policy_table(&self) -> Vec<f64> {
        self.logits
            .chunks(self.num_actions)
            .flat_map(softmax)
            .collect()
    }

    pub fn greedy_action(&self, state: usize) -> usize {
        argmax(&self.logits[state * self.num_actions..(state + 1) * self.num_actions])
    }
}
