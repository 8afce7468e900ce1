use super::{argmax, softmax_into};
use crate::env::TabularMdp;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_states * num_actions {
            return Err(Error::contract("Q table size does not match state/action counts"));
        }
        Ok(Self {
            num_states,
            num_actions,
            values,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.num_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.num_actions..(state + 1) * self.num_actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Lowest-id maximizing action.
    pub fn greedy(&self, state: usize) -> usize {
        argmax(self.row(state))
    }

    pub fn state_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn value_iteration(model: &TabularMdp, gamma: f64, tol: f64) -> Result<QTable> {
    value_iteration_capped(model, gamma, tol, DEFAULT_MAX_ITERATIONS)
}

/// Synchronous Bellman-optimality sweeps on expected rewards until the sup-norm
/// residual drops below `tol`. Absorbing states have value 0.
pub fn value_iteration_capped(
    model: &TabularMdp,
    gamma: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<QTable> {
    if !(0.0..=1.0).contains(&gamma) || !(tol > 0.0) {
        return Err(Error::contract(format!("invalid gamma {gamma} or tol {tol}")));
    }
    let (ns, na) = (model.num_states(), model.num_actions());
    let mut q = vec![0.0; ns * na];
    let mut v = vec![0.0; ns];
    for _ in 0..max_iterations {
        let mut residual: f64 = 0.0;
        for s in 0..ns {
            if model.is_absorbing(s) {
                continue;
            }
            for a in 0..na {
                let backup: f64 = model
                    .outcomes(s, a)
                    .iter()
                    .map(|o| o.prob * (o.reward.mean() + gamma * v[o.next]))
                    .sum();
                residual = residual.max((backup - q[s * na + a]).abs());
                q[s * na + a] = backup;
            }
        }
        for s in 0..ns {
            if !model.is_absorbing(s) {
                v[s] = q[s * na..(s + 1) * na].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
        }
        if residual < tol {
            return QTable::new(ns, na, q);
        }
    }
    Err(Error::diagnostic(format!(
        "value iteration did not reach residual {tol} within {max_iterations} sweeps"
    )))
}

/// Row-major table `pi_n(a|s) ∝ exp(Q(s,a) / temperature)`.
pub fn risk_neutral_from_q(q: &QTable, temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::contract(format!("temperature must be positive, got {temperature}")));
    }
    let na = q.num_actions;
    let mut out = vec![0.0; q.values.len()];
    let mut scaled = vec![0.0; na];
    for s in 0..q.num_states {
        for (x, v) in scaled.iter_mut().zip(q.row(s)) {
            *x = v / temperature;
        }
        softmax_into(&scaled, &mut out[s * na..(s + 1) * na]);
    }
    Ok(out)
}
