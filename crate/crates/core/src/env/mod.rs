//! Episodic environments and seeded rollouts.

mod bandit;
mod maze;
mod model;

pub use bandit::{RiskyBandit, ACTION_RISKY, ACTION_SAFE};
pub use maze::{classify_path, Cell, Maze, MazeSpec, Move, PathClass};
pub use model::{Outcome, Reward, TabularMdp};

use crate::error::{Error, Result};
use crate::policy::{sample_action, Policy};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    /// Episode ended: the goal was reached or the step budget ran out.
    pub done: bool,
    /// Ended only because of the step budget; learners still bootstrap from `next_state`.
    pub truncated: bool,
}

impl Transition {
    /// Whether the value of `next_state` belongs in a one-step target.
    pub fn bootstraps(&self) -> bool {
        !self.done || self.truncated
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    /// Discounted sum of rewards from the first step.
    pub total_return: f64,
}

impl Trajectory {
    pub fn from_transitions(transitions: Vec<Transition>, gamma: f64) -> Self {
        let total_return = discounted_sum(transitions.iter().map(|t| t.reward), gamma);
        Self {
            transitions,
            total_return,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Discounted return-to-go `G_t` for every step.
    pub fn returns_to_go(&self, gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.transitions.len()];
        let mut g = 0.0;
        for (i, t) in self.transitions.iter().enumerate().rev() {
            g = t.reward + gamma * g;
            out[i] = g;
        }
        out
    }

    pub fn visits(&self, state: usize) -> bool {
        self.transitions.iter().any(|t| t.next_state == state)
    }

    pub fn last_state(&self) -> Option<usize> {
        self.transitions.last().map(|t| t.next_state)
    }
}

pub(crate) fn discounted_sum(rewards: impl Iterator<Item = f64>, gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// Common interface of the episodic tabular environments.
pub trait Environment {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn initial_state(&self) -> usize;
    fn discount(&self) -> f64;
    fn max_episode_len(&self) -> usize;
    fn is_terminal(&self, state: usize) -> bool;
    /// States the agent can occupy (walls are not).
    fn is_valid_state(&self, state: usize) -> bool;

    /// Exact outcome law of taking `action` in the non-terminal `state`.
    fn outcomes(&self, state: usize, action: usize) -> Result<Vec<Outcome>>;

    fn step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> Result<Transition> {
        let outcomes = self.outcomes(state, action)?;
        let outcome = if outcomes.len() == 1 {
            outcomes[0]
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = outcomes[outcomes.len() - 1];
            for o in &outcomes {
                acc += o.prob;
                if u < acc {
                    chosen = *o;
                    break;
                }
            }
            chosen
        };
        let reward = outcome.reward.sample(rng);
        Ok(Transition {
            state,
            action,
            reward,
            next_state: outcome.next,
            done: self.is_terminal(outcome.next),
            truncated: false,
        })
    }

    /// Explicit model for planning and exact enumeration.
    fn model(&self) -> Result<TabularMdp> {
        let (ns, na) = (self.num_states(), self.num_actions());
        let mut absorbing = Vec::with_capacity(ns);
        let mut outcomes = Vec::with_capacity(ns * na);
        for s in 0..ns {
            let dead = self.is_terminal(s) || !self.is_valid_state(s);
            absorbing.push(dead);
            for a in 0..na {
                outcomes.push(if dead { Vec::new() } else { self.outcomes(s, a)? });
            }
        }
        TabularMdp::new(ns, na, self.initial_state(), self.discount(), absorbing, outcomes)
    }
}

/// Roll out one episode of `policy` from the initial state.
///
/// The episode ends at a terminal state or after `max_episode_len` steps; in the
/// latter case the last transition is marked `done` and `truncated`.
pub fn run_episode<E, P, R>(env: &E, policy: &P, rng: &mut R) -> Result<Trajectory>
where
    E: Environment + ?Sized,
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    let max_len = env.max_episode_len();
    let mut transitions = Vec::new();
    let mut state = env.initial_state();
    for step in 0..max_len {
        let dist = policy.action_probs(state);
        if dist.len() != env.num_actions() {
            return Err(Error::contract(format!(
                "policy returned {} probabilities for {} actions",
                dist.len(),
                env.num_actions()
            )));
        }
        dist.check()?;
        let action = sample_action(dist.probs(), rng);
        let mut t = env.step(state, action, rng)?;
        if !t.done && step + 1 == max_len {
            t.done = true;
            t.truncated = true;
        }
        transitions.push(t);
        if t.done {
            break;
        }
        state = t.next_state;
    }
    Ok(Trajectory::from_transitions(transitions, env.discount()))
}

/// Summary flags used by the batch metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpisodeFlags {
    /// Maze: the red-free short-enough path. Bandit: the deterministic arm.
    pub risk_averse: bool,
    /// Maze: red visited. Bandit: the noisy arm.
    pub risky: bool,
    pub reached_goal: bool,
}

/// The environments selectable from experiment configs.
#[derive(Debug, Clone)]
pub enum EnvKind {
    Maze(Maze),
    Bandit(RiskyBandit),
}

impl EnvKind {
    pub fn flags(&self, traj: &Trajectory) -> EpisodeFlags {
        match self {
            EnvKind::Maze(maze) => {
                let class = classify_path(traj, maze.spec());
                EpisodeFlags {
                    risk_averse: class == PathClass::RiskAverseLong,
                    risky: traj.visits(maze.spec().state_id(maze.spec().red)),
                    reached_goal: traj
                        .last_state()
                        .is_some_and(|s| s == maze.spec().state_id(maze.spec().goal)),
                }
            }
            EnvKind::Bandit(_) => {
                let first = traj.transitions.first().map(|t| t.action);
                EpisodeFlags {
                    risk_averse: first == Some(ACTION_SAFE),
                    risky: first == Some(ACTION_RISKY),
                    reached_goal: !traj.is_empty(),
                }
            }
        }
    }
}

macro_rules! delegate {
    ($self:ident, $e:ident => $body:expr) => {
        match $self {
            EnvKind::Maze($e) => $body,
            EnvKind::Bandit($e) => $body,
        }
    };
}

impl Environment for EnvKind {
    fn num_states(&self) -> usize {
        delegate!(self, e => e.num_states())
    }
    fn num_actions(&self) -> usize {
        delegate!(self, e => e.num_actions())
    }
    fn initial_state(&self) -> usize {
        delegate!(self, e => e.initial_state())
    }
    fn discount(&self) -> f64 {
        delegate!(self, e => e.discount())
    }
    fn max_episode_len(&self) -> usize {
        delegate!(self, e => e.max_episode_len())
    }
    fn is_terminal(&self, state: usize) -> bool {
        delegate!(self, e => e.is_terminal(state))
    }
    fn is_valid_state(&self, state: usize) -> bool {
        delegate!(self, e => e.is_valid_state(state))
    }
    fn outcomes(&self, state: usize, action: usize) -> Result<Vec<Outcome>> {
        delegate!(self, e => e.outcomes(state, action))
    }
    fn step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> Result<Transition> {
        delegate!(self, e => e.step(state, action, rng))
    }
}
