//! Tabular policies over one-hot state-action features.

mod mixture;
mod planning;
mod softmax;

pub use mixture::{MixturePolicy, WeightMode};
pub use planning::{risk_neutral_from_q, value_iteration, value_iteration_capped, QTable};
pub use softmax::SoftmaxPolicy;

use crate::error::{Error, Result};
use rand::Rng;

/// Tolerance on `sum(p) = 1` for every emitted distribution.
pub const PROB_TOL: f64 = 1e-9;

/// One-hot encoding of `(state, action)` pairs: `zeta(s, a)` has a single 1 at
/// `s * num_actions + a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureMap {
    pub num_states: usize,
    pub num_actions: usize,
}

impl FeatureMap {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
        }
    }

    pub fn dim(&self) -> usize {
        self.num_states * self.num_actions
    }

    pub fn index(&self, state: usize, action: usize) -> usize {
        state * self.num_actions + action
    }

    pub fn features(&self, state: usize, action: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[self.index(state, action)] = 1.0;
        v
    }

    /// Range of the parameter block that belongs to `state`.
    pub fn block(&self, state: usize) -> std::ops::Range<usize> {
        state * self.num_actions..(state + 1) * self.num_actions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution(Vec<f64>);

impl ActionDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let d = Self(probs);
        d.check()?;
        Ok(d)
    }

    pub(crate) fn unchecked(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        if self.0.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::contract(format!("negative or NaN probability in {:?}", self.0)));
        }
        let total: f64 = self.0.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::contract(format!("action probabilities sum to {total}")));
        }
        Ok(())
    }

    /// Lowest action id among the most probable actions.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }
}

/// Lowest index among the maximal entries.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from a probability vector.
pub fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

pub trait Policy {
    fn num_actions(&self) -> usize;
    fn action_probs(&self, state: usize) -> ActionDistribution;
}

/// A differentiable policy over a flat parameter vector.
pub trait ScorePolicy: Policy {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Adds `scale * grad log pi(action | state)` into `grad`.
    fn add_log_grad(&self, state: usize, action: usize, scale: f64, grad: &mut [f64]) -> Result<()>;

    fn log_grad(&self, state: usize, action: usize) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.params().len()];
        self.add_log_grad(state, action, 1.0, &mut g)?;
        Ok(g)
    }
}

/// Numerically stable softmax of `logits` into `out`.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    out
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fixed per-state action probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePolicy {
    num_actions: usize,
    probs: Vec<f64>,
}

impl TablePolicy {
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_actions,
            probs: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    /// Row-major `num_states x num_actions` table; every row must be a distribution.
    pub fn from_rows(num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if num_actions == 0 || !probs.len().is_multiple_of(num_actions) {
            return Err(Error::contract("probability table is not a whole number of rows"));
        }
        for row in probs.chunks(num_actions) {
            ActionDistribution::unchecked(row.to_vec()).check()?;
        }
        Ok(Self { num_actions, probs })
    }

    #[cfg(test)]
    pub(crate) fn from_rows_unchecked(num_actions: usize, probs: Vec<f64>) -> Self {
        Self { num_actions, probs }
    }

    /// Deterministic policy: `actions[s]` with probability one.
    pub fn deterministic(num_actions: usize, actions: &[usize]) -> Self {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * num_actions + a] = 1.0;
        }
        Self { num_actions, probs }
    }

    pub fn num_states(&self) -> usize {
        self.probs.len() / self.num_actions
    }

    pub fn rows(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.probs[state * self.num_actions..(state + 1) * self.num_actions]
    }
}

impl Policy for TablePolicy {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn action_probs(&self, state: usize) -> ActionDistribution {
        ActionDistribution::unchecked(self.row(state).to_vec())
    }
}
