use super::{sigmoid, softmax_into, ActionDistribution, FeatureMap, Policy, ScorePolicy, PROB_TOL};
use crate::error::{Error, Result};

/// How the mixture weight logits `theta2` are shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// One weight `sigma(theta2[s, a])` per state-action pair; the mixture is
    /// renormalized over actions.
    #[default]
    PerAction,
    /// One weight `w(s) = sigma(theta2[s])` per state; no renormalization needed.
    PerState,
}

impl WeightMode {
    pub fn name(self) -> &'static str {
        match self {
            WeightMode::PerAction => "per_action",
            WeightMode::PerState => "per_state",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "per_action" => Some(WeightMode::PerAction),
            "per_state" => Some(WeightMode::PerState),
            _ => None,
        }
    }
}

/// `pi(a|s) ∝ w(s,a) pi'(a|s) + (1 - w(s,a)) pi_n(a|s)` with `pi'` a softmax over
/// `theta1` and `pi_n` a frozen table.
///
/// Parameters live in one flat vector: `theta1` (S*A entries) followed by `theta2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePolicy {
    features: FeatureMap,
    mode: WeightMode,
    params: Vec<f64>,
    risk_neutral: Vec<f64>,
}

struct Parts {
    adj: Vec<f64>,
    weights: Vec<f64>,
    unnorm: Vec<f64>,
    total: f64,
}

impl MixturePolicy {
    /// Zero-initialized parameters (`w = 0.5`, `pi'` uniform).
    pub fn new(
        num_states: usize,
        num_actions: usize,
        mode: WeightMode,
        risk_neutral: Vec<f64>,
    ) -> Result<Self> {
        let features = FeatureMap::new(num_states, num_actions);
        let n2 = Self::theta2_len(features, mode);
        Self::from_params(num_states, num_actions, mode, vec![0.0; features.dim() + n2], risk_neutral)
    }

    pub fn from_params(
        num_states: usize,
        num_actions: usize,
        mode: WeightMode,
        params: Vec<f64>,
        risk_neutral: Vec<f64>,
    ) -> Result<Self> {
        let features = FeatureMap::new(num_states, num_actions);
        if risk_neutral.len() != features.dim() {
            return Err(Error::contract(format!(
                "risk-neutral table has {} entries, expected {}",
                risk_neutral.len(),
                features.dim()
            )));
        }
        for (s, row) in risk_neutral.chunks(num_actions).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > PROB_TOL {
                return Err(Error::contract(format!("risk-neutral row {s} is not a distribution")));
            }
        }
        let expected = features.dim() + Self::theta2_len(features, mode);
        if params.len() != expected {
            return Err(Error::contract(format!(
                "mixture parameters have {} entries, expected {expected}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::contract("mixture parameters have non-finite entries"));
        }
        Ok(Self {
            features,
            mode,
            params,
            risk_neutral,
        })
    }

    fn theta2_len(features: FeatureMap, mode: WeightMode) -> usize {
        match mode {
            WeightMode::PerAction => features.dim(),
            WeightMode::PerState => features.num_states,
        }
    }

    pub fn features(&self) -> FeatureMap {
        self.features
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn theta1(&self) -> &[f64] {
        &self.params[..self.features.dim()]
    }

    pub fn theta2(&self) -> &[f64] {
        &self.params[self.features.dim()..]
    }

    pub fn theta2_mut(&mut self) -> &mut [f64] {
        let d = self.features.dim();
        &mut self.params[d..]
    }

    pub fn risk_neutral(&self) -> &[f64] {
        &self.risk_neutral
    }

    /// Replaces the frozen component, e.g. after an offline learning pass.
    pub fn set_risk_neutral(&mut self, table: Vec<f64>) -> Result<()> {
        let f = self.features;
        let mode = self.mode;
        *self = Self::from_params(f.num_states, f.num_actions, mode, self.params.clone(), table)?;
        Ok(())
    }

    fn risk_neutral_row(&self, state: usize) -> &[f64] {
        &self.risk_neutral[self.features.block(state)]
    }

    fn theta2_index(&self, state: usize, action: usize) -> usize {
        self.features.dim()
            + match self.mode {
                WeightMode::PerAction => self.features.index(state, action),
                WeightMode::PerState => state,
            }
    }

    /// Mixture weight `sigma(theta2)` for `(state, action)`.
    pub fn weight(&self, state: usize, action: usize) -> f64 {
        sigmoid(self.params[self.theta2_index(state, action)])
    }

    /// The adjustable component `pi'(.|s)`.
    pub fn adjustable_probs(&self, state: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.features.num_actions];
        softmax_into(&self.theta1()[self.features.block(state)], &mut p);
        p
    }

    fn parts(&self, state: usize) -> Parts {
        let na = self.features.num_actions;
        let adj = self.adjustable_probs(state);
        let rn = self.risk_neutral_row(state);
        let weights: Vec<f64> = (0..na).map(|a| self.weight(state, a)).collect();
        let unnorm: Vec<f64> = (0..na)
            .map(|a| weights[a] * adj[a] + (1.0 - weights[a]) * rn[a])
            .collect();
        let total = unnorm.iter().sum();
        Parts {
            adj,
            weights,
            unnorm,
            total,
        }
    }
}

impl Policy for MixturePolicy {
    fn num_actions(&self) -> usize {
        self.features.num_actions
    }

    fn action_probs(&self, state: usize) -> ActionDistribution {
        let p = self.parts(state);
        ActionDistribution::unchecked(p.unnorm.iter().map(|u| u / p.total).collect())
    }
}

impl ScorePolicy for MixturePolicy {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    // With u_b = w_b pi'_b + (1 - w_b) pi_n_b and U = sum_b u_b, log pi_a = log u_a - log U:
    //   d/dtheta1[c] = w_a pi'_a (1{a=c} - pi'_c) / u_a - (w_c pi'_c - pi'_c sum_b w_b pi'_b) / U
    //   d/dtheta2[c] = 1{a=c} d_a / u_a - d_c / U,   d_c = (pi'_c - pi_n_c) w_c (1 - w_c)
    // Per-state weights sum the theta2 entries over c.
    fn add_log_grad(&self, state: usize, action: usize, scale: f64, grad: &mut [f64]) -> Result<()> {
        let na = self.features.num_actions;
        if state >= self.features.num_states || action >= na {
            return Err(Error::contract(format!("invalid state/action ({state}, {action})")));
        }
        let Parts {
            adj,
            weights,
            unnorm,
            total,
        } = self.parts(state);
        let ua = unnorm[action];
        if !(ua > 0.0) {
            return Err(Error::contract(format!(
                "log-gradient undefined: pi({action}|{state}) = 0"
            )));
        }
        let rn = self.risk_neutral_row(state);
        let weighted_adj: f64 = (0..na).map(|b| weights[b] * adj[b]).sum();
        let base = self.features.block(state).start;
        for c in 0..na {
            let own = if c == action {
                weights[action] * adj[action] * (1.0 - adj[c])
            } else {
                -weights[action] * adj[action] * adj[c]
            };
            let g = own / ua - (weights[c] * adj[c] - adj[c] * weighted_adj) / total;
            grad[base + c] += scale * g;
        }
        let d = |c: usize| (adj[c] - rn[c]) * weights[c] * (1.0 - weights[c]);
        match self.mode {
            WeightMode::PerAction => {
                let off = self.features.dim() + base;
                for c in 0..na {
                    let own = if c == action { d(c) / ua } else { 0.0 };
                    grad[off + c] += scale * (own - d(c) / total);
                }
            }
            WeightMode::PerState => {
                let spread: f64 = (0..na).map(d).sum::<f64>() / total;
                grad[self.features.dim() + state] += scale * (d(action) / ua - spread);
            }
        }
        Ok(())
    }
}
