use super::{Environment, Outcome, Reward};
use crate::error::{Error, Result};

pub const ACTION_SAFE: usize = 0;
pub const ACTION_RISKY: usize = 1;

/// One-step decision: a sure reward of 1 or a gamble paying 3 (p = 0.9) or -10 (p = 0.1).
///
/// The gamble has the higher mean (1.7 vs 1) but a much worse lower tail, so the
/// risk-neutral and the CVaR(0.1)-optimal choices disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskyBandit {
    pub safe_reward: f64,
    pub win_reward: f64,
    pub loss_reward: f64,
    pub loss_prob: f64,
}

impl Default for RiskyBandit {
    fn default() -> Self {
        Self::new()
    }
}

impl RiskyBandit {
    pub const DECISION: usize = 0;
    pub const DONE: usize = 1;

    pub fn new() -> Self {
        Self {
            safe_reward: 1.0,
            win_reward: 3.0,
            loss_reward: -10.0,
            loss_prob: 0.1,
        }
    }
}

impl Environment for RiskyBandit {
    fn num_states(&self) -> usize {
        2
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn initial_state(&self) -> usize {
        Self::DECISION
    }

    fn discount(&self) -> f64 {
        1.0
    }

    fn max_episode_len(&self) -> usize {
        1
    }

    fn is_terminal(&self, state: usize) -> bool {
        state == Self::DONE
    }

    fn is_valid_state(&self, state: usize) -> bool {
        state < 2
    }

    fn outcomes(&self, state: usize, action: usize) -> Result<Vec<Outcome>> {
        if state != Self::DECISION {
            return Err(Error::contract(format!("bandit state {state} is not a decision state")));
        }
        let done = |prob, r| Outcome {
            prob,
            next: Self::DONE,
            reward: Reward::Fixed(r),
        };
        match action {
            ACTION_SAFE => Ok(vec![done(1.0, self.safe_reward)]),
            ACTION_RISKY => Ok(vec![
                done(1.0 - self.loss_prob, self.win_reward),
                done(self.loss_prob, self.loss_reward),
            ]),
            _ => Err(Error::contract(format!("unknown bandit action {action}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn arm_statistics() {
        let env = RiskyBandit::new();
        let mut rng = stream_rng(5, Stream::Rollout);
        let n = 50_000;
        let mut losses = 0;
        for _ in 0..n {
            let t = env.step(0, ACTION_RISKY, &mut rng).unwrap();
            assert!(t.done);
            if t.reward == -10.0 {
                losses += 1;
            } else {
                assert_eq!(t.reward, 3.0);
            }
        }
        let rate = losses as f64 / n as f64;
        assert!((rate - 0.1).abs() < 0.01, "loss rate {rate}");
        let t = env.step(0, ACTION_SAFE, &mut rng).unwrap();
        assert_eq!((t.reward, t.done), (1.0, true));
    }

    #[test]
    fn expected_values() {
        let env = RiskyBandit::new();
        let mean = |a| -> f64 {
            env.outcomes(0, a).unwrap().iter().map(|o| o.prob * o.reward.mean()).sum()
        };
        assert!((mean(ACTION_RISKY) - 1.7).abs() < 1e-12);
        assert_eq!(mean(ACTION_SAFE), 1.0);
    }
}
