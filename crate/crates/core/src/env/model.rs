use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Reward law attached to one transition outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reward {
    Fixed(f64),
    /// `mean + scale * z` with `z ~ N(0, 1)`.
    Gaussian { mean: f64, scale: f64 },
}

impl Reward {
    pub fn mean(&self) -> f64 {
        match *self {
            Reward::Fixed(r) => r,
            Reward::Gaussian { mean, .. } => mean,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Reward::Fixed(r) => r,
            Reward::Gaussian { mean, scale } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + scale * z
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub prob: f64,
    pub next: usize,
    pub reward: Reward,
}

/// Explicit tabular MDP: every (state, action) pair lists its outcome law.
///
/// States flagged `absorbing` have no dynamics (terminal goals, wall cells) and
/// contribute zero value.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    initial: usize,
    discount: f64,
    absorbing: Vec<bool>,
    outcomes: Vec<Vec<Outcome>>,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        initial: usize,
        discount: f64,
        absorbing: Vec<bool>,
        outcomes: Vec<Vec<Outcome>>,
    ) -> Result<Self> {
        if absorbing.len() != n_states || outcomes.len() != n_states * n_actions {
            return Err(Error::contract("model tables do not match state/action counts"));
        }
        if initial >= n_states {
            return Err(Error::contract("initial state out of range"));
        }
        for (idx, outs) in outcomes.iter().enumerate() {
            let s = idx / n_actions;
            if absorbing[s] {
                continue;
            }
            let total: f64 = outs.iter().map(|o| o.prob).sum();
            if outs.is_empty() || (total - 1.0).abs() > 1e-12 {
                return Err(Error::contract(format!(
                    "outcome probabilities of state {s} action {} sum to {total}",
                    idx % n_actions
                )));
            }
            if outs.iter().any(|o| o.next >= n_states || o.prob < 0.0) {
                return Err(Error::contract(format!("invalid outcome at state {s}")));
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            initial,
            discount,
            absorbing,
            outcomes,
        })
    }

    pub fn num_states(&self) -> usize {
        self.n_states
    }

    pub fn num_actions(&self) -> usize {
        self.n_actions
    }

    pub fn initial_state(&self) -> usize {
        self.initial
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.absorbing[state]
    }

    pub fn outcomes(&self, state: usize, action: usize) -> &[Outcome] {
        &self.outcomes[state * self.n_actions + action]
    }
}
