use super::cvar_pg::apply_ascent;
use crate::env::Trajectory;
use crate::error::{Error, Result};
use crate::policy::ScorePolicy;

/// Policy-gradient step with a tabular state-value baseline.
///
/// Policy: `theta += lr_policy / N * sum_i sum_t grad log pi(a_t|s_t) (G_t - V(s_t))`.
/// Baseline: `V(s) += lr_value / N * sum of (G_t - V(s))` over visits of `s`.
/// Advantages use the baseline from before the step. Returns the policy gradient norm.
pub fn reinforce_update<P: ScorePolicy + ?Sized>(
    batch: &[Trajectory],
    policy: &mut P,
    baseline: &mut [f64],
    gamma: f64,
    lr_policy: f64,
    lr_value: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::contract("REINFORCE needs a nonempty batch"));
    }
    let n = batch.len() as f64;
    let mut grad = vec![0.0; policy.params().len()];
    let mut value_step = vec![0.0; baseline.len()];
    for traj in batch {
        let to_go = traj.returns_to_go(gamma);
        for (t, g) in traj.transitions.iter().zip(to_go) {
            let adv = g - baseline[t.state];
            if adv != 0.0 {
                policy.add_log_grad(t.state, t.action, adv / n, &mut grad)?;
            }
            value_step[t.state] += adv / n;
        }
    }
    for (v, d) in baseline.iter_mut().zip(value_step) {
        *v += lr_value * d;
    }
    Ok(apply_ascent(policy.params_mut(), &grad, lr_policy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Transition;
    use crate::policy::SoftmaxPolicy;

    #[test]
    fn zero_advantage_leaves_policy() {
        let traj = Trajectory::from_transitions(
            vec![
                Transition { state: 0, action: 1, reward: 2.0, next_state: 1, done: false, truncated: false },
                Transition { state: 1, action: 0, reward: 3.0, next_state: 2, done: true, truncated: false },
            ],
            0.5,
        );
        let mut baseline = vec![3.5, 3.0, 0.0];
        let mut pi = SoftmaxPolicy::zeros(3, 2);
        let norm = reinforce_update(&[traj], &mut pi, &mut baseline, 0.5, 0.1, 1.0).unwrap();
        assert_eq!(norm, 0.0);
        assert!(pi.params().iter().all(|p| *p == 0.0));
        assert_eq!(baseline, vec![3.5, 3.0, 0.0]);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let mut pi = SoftmaxPolicy::zeros(1, 2);
        assert!(reinforce_update(&[], &mut pi, &mut [0.0], 1.0, 0.1, 1.0).is_err());
    }
}
