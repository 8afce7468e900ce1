//! Risk-averse reinforcement learning on small tabular domains.
//!
//! The crate provides:
//! - episodic environments ([`env::Maze`], [`env::RiskyBandit`]) with seeded rollouts,
//! - empirical quantile / CVaR estimators ([`risk`]),
//! - tabular softmax and mixture policies with exact score functions ([`policy`]),
//! - CVaR policy gradient, REINFORCE, the mixture trainer with tabular IQL, and two
//!   quantile-based distributional baselines ([`learners`]),
//! - brute-force oracles used to verify all of the above ([`oracles`]).

// Negated comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod env;
pub mod error;
pub mod learners;
pub mod oracles;
pub mod policy;
pub mod risk;
pub mod rng;

pub use error::{Error, Result};
