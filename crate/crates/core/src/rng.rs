//! Seed derivation.
//!
//! A run's master seed is expanded into independent ChaCha8 streams, one per
//! consumer. The stream id is the ChaCha nonce, so every consumer reads its own
//! counter range and adding a consumer never shifts another one's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Action sampling and environment noise during training rollouts.
    Rollout = 0,
    /// Random parameter initialisation (unused by the zero-initialised learners).
    PolicyInit = 1,
    /// Replay-buffer sampling.
    Buffer = 2,
    /// Epsilon-greedy exploration decisions.
    Exploration = 3,
    /// Evaluation rollouts that must not perturb training.
    Evaluation = 4,
}

pub fn stream_rng(master_seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream as u64);
    rng
}

/// All generator streams owned by one training run.
#[derive(Debug, Clone)]
pub struct Streams {
    pub rollout: ChaCha8Rng,
    pub policy_init: ChaCha8Rng,
    pub buffer: ChaCha8Rng,
    pub exploration: ChaCha8Rng,
    pub evaluation: ChaCha8Rng,
}

impl Streams {
    pub fn new(master_seed: u64) -> Self {
        Self {
            rollout: stream_rng(master_seed, Stream::Rollout),
            policy_init: stream_rng(master_seed, Stream::PolicyInit),
            buffer: stream_rng(master_seed, Stream::Buffer),
            exploration: stream_rng(master_seed, Stream::Exploration),
            evaluation: stream_rng(master_seed, Stream::Evaluation),
        }
    }
}
