use crate::env::Trajectory;
use crate::error::{Error, Result};
use crate::policy::ScorePolicy;
use crate::risk::{stable_order, tail_count};

/// The trajectories that enter the CVaR gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSet {
    /// Original batch indices: every return below the quantile, then ties at the
    /// quantile in ascending index order, exactly `ceil(alpha N)` in total.
    pub members: Vec<usize>,
    pub quantile: f64,
}

pub fn min_batch_size(alpha: f64) -> usize {
    (1.0 / alpha - 1e-9).ceil() as usize
}

pub fn tail_set(returns: &[f64], alpha: f64) -> Result<TailSet> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::contract(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let n = returns.len();
    if n < min_batch_size(alpha) {
        return Err(Error::contract(format!(
            "batch of {n} trajectories is smaller than ceil(1/alpha) = {}",
            min_batch_size(alpha)
        )));
    }
    let k = tail_count(n, alpha);
    let order = stable_order(returns);
    let quantile = returns[order[k - 1]];
    Ok(TailSet {
        members: order[..k].to_vec(),
        quantile,
    })
}

/// Gradient estimate `1/(alpha N) sum_{i in tail} (R_i - q) sum_t grad log pi(a_t|s_t)`.
pub fn cvar_pg_gradient<P: ScorePolicy + ?Sized>(
    batch: &[Trajectory],
    policy: &P,
    alpha: f64,
) -> Result<Vec<f64>> {
    let returns: Vec<f64> = batch.iter().map(|t| t.total_return).collect();
    let tail = tail_set(&returns, alpha)?;
    let mut grad = vec![0.0; policy.params().len()];
    let norm = alpha * batch.len() as f64;
    for &i in &tail.members {
        let shortfall = returns[i] - tail.quantile;
        if shortfall == 0.0 {
            continue;
        }
        for t in &batch[i].transitions {
            policy.add_log_grad(t.state, t.action, shortfall / norm, &mut grad)?;
        }
    }
    Ok(grad)
}

/// One ascent step on the CVaR estimate. Returns the Euclidean norm of the gradient.
pub fn cvar_pg_update<P: ScorePolicy + ?Sized>(
    batch: &[Trajectory],
    policy: &mut P,
    alpha: f64,
    lr: f64,
) -> Result<f64> {
    let grad = cvar_pg_gradient(batch, policy, alpha)?;
    Ok(apply_ascent(policy.params_mut(), &grad, lr))
}

pub(crate) fn apply_ascent(params: &mut [f64], grad: &[f64], lr: f64) -> f64 {
    for (p, g) in params.iter_mut().zip(grad) {
        *p += lr * g;
    }
    grad.iter().map(|g| g * g).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Transition;
    use crate::policy::{Policy, SoftmaxPolicy};
    use crate::risk::tail_flatness;
    use proptest::prelude::*;

    fn bandit_traj(action: usize, reward: f64) -> Trajectory {
        Trajectory::from_transitions(
            vec![Transition {
                state: 0,
                action,
                reward,
                next_state: 1,
                done: true,
                truncated: false,
            }],
            1.0,
        )
    }

    #[test]
    fn tie_breaking_fills_by_index() {
        let t = tail_set(&[3.0, 1.0, 2.0, 1.0, 2.0, 2.0, 9.0, 9.0, 9.0, 9.0], 0.3).unwrap();
        assert_eq!(t.members, vec![1, 3, 2]);
        assert_eq!(t.quantile, 2.0);
    }

    #[test]
    fn batch_too_small() {
        assert!(tail_set(&[1.0; 9], 0.1).is_err());
        assert!(tail_set(&[1.0; 10], 0.1).is_ok());
        assert!(tail_set(&[1.0; 10], 0.0).is_err());
    }

    #[test]
    fn flat_tail_gives_exact_zero() {
        let mut pi = SoftmaxPolicy::zeros(2, 2);
        let batch: Vec<_> = (0..10).map(|i| bandit_traj(i % 2, if i < 5 { 1.0 } else { 3.0 })).collect();
        let before = pi.params().to_vec();
        let norm = cvar_pg_update(&batch, &mut pi, 0.2, 0.5).unwrap();
        assert_eq!(norm, 0.0);
        assert_eq!(pi.params(), &before[..]);
    }

    #[test]
    fn loss_pushes_away_from_action() {
        let mut pi = SoftmaxPolicy::zeros(2, 2);
        let mut batch: Vec<_> = (0..9).map(|_| bandit_traj(0, 1.0)).collect();
        batch.push(bandit_traj(1, -10.0));
        let norm = cvar_pg_update(&batch, &mut pi, 0.2, 0.1).unwrap();
        assert!(norm > 0.0);
        assert!(pi.action_probs(0).probs()[1] < 0.5);
    }

    proptest! {
        #[test]
        fn tail_has_exact_size(
            returns in prop::collection::vec(prop::sample::select(vec![-3.0, -1.0, 0.0, 2.0]), 10..60),
            alpha in 0.1f64..1.0,
        ) {
            let t = tail_set(&returns, alpha).unwrap();
            prop_assert_eq!(t.members.len(), tail_count(returns.len(), alpha));
            for &i in &t.members {
                prop_assert!(returns[i] <= t.quantile);
            }
            let below = returns.iter().filter(|r| **r < t.quantile).count();
            prop_assert!(t.members[..below].iter().all(|&i| returns[i] < t.quantile));
        }

        #[test]
        fn zero_iff_flat(
            picks in prop::collection::vec((0usize..2, prop::sample::select(vec![-10.0, 1.0, 3.0])), 10..40),
            theta in prop::collection::vec(-2.0f64..2.0, 4),
        ) {
            let mut pi = SoftmaxPolicy::from_theta(2, 2, theta).unwrap();
            let batch: Vec<_> = picks.iter().map(|(a, r)| bandit_traj(*a, *r)).collect();
            let returns: Vec<f64> = batch.iter().map(|t| t.total_return).collect();
            let norm = cvar_pg_update(&batch, &mut pi, 0.1, 0.01).unwrap();
            prop_assert_eq!(norm == 0.0, tail_flatness(&returns, 0.1).unwrap());
        }
    }
}
