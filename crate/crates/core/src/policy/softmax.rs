use super::{softmax_into, ActionDistribution, FeatureMap, Policy, ScorePolicy};
use crate::error::{Error, Result};

/// `pi(a|s) = exp(theta . zeta(s,a)) / sum_b exp(theta . zeta(s,b))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    features: FeatureMap,
    theta: Vec<f64>,
}

impl SoftmaxPolicy {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        let features = FeatureMap::new(num_states, num_actions);
        Self {
            theta: vec![0.0; features.dim()],
            features,
        }
    }

    pub fn from_theta(num_states: usize, num_actions: usize, theta: Vec<f64>) -> Result<Self> {
        let features = FeatureMap::new(num_states, num_actions);
        if theta.len() != features.dim() {
            return Err(Error::contract(format!(
                "theta has {} entries, expected {}",
                theta.len(),
                features.dim()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::contract("theta has non-finite entries"));
        }
        Ok(Self { features, theta })
    }

    pub fn features(&self) -> FeatureMap {
        self.features
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn probs_into(&self, state: usize, out: &mut [f64]) {
        softmax_into(&self.theta[self.features.block(state)], out);
    }
}

impl Policy for SoftmaxPolicy {
    fn num_actions(&self) -> usize {
        self.features.num_actions
    }

    fn action_probs(&self, state: usize) -> ActionDistribution {
        let mut p = vec![0.0; self.features.num_actions];
        self.probs_into(state, &mut p);
        ActionDistribution::unchecked(p)
    }
}

impl ScorePolicy for SoftmaxPolicy {
    fn params(&self) -> &[f64] {
        &self.theta
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    // grad log pi(a|s) = zeta(s,a) - E_{b ~ pi(.|s)} zeta(s,b)
    fn add_log_grad(&self, state: usize, action: usize, scale: f64, grad: &mut [f64]) -> Result<()> {
        let na = self.features.num_actions;
        if state >= self.features.num_states || action >= na {
            return Err(Error::contract(format!("invalid state/action ({state}, {action})")));
        }
        let mut p = vec![0.0; na];
        self.probs_into(state, &mut p);
        let block = &mut grad[self.features.block(state)];
        for (b, g) in block.iter_mut().enumerate() {
            let indicator = if b == action { 1.0 } else { 0.0 };
            *g += scale * (indicator - p[b]);
        }
        Ok(())
    }
}
