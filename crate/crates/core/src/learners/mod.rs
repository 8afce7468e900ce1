//! Training algorithms.

pub mod buffer;
pub mod cvar_pg;
pub mod distributional;
pub mod iql;
pub mod mix;
pub mod reinforce;
pub mod schedule;
pub mod trainers;

pub use buffer::ReplayBuffer;
pub use cvar_pg::{cvar_pg_gradient, cvar_pg_update, min_batch_size, tail_set, TailSet};
pub use distributional::{
    drl_lim_act, drl_lim_update, drl_mkv_act, drl_mkv_update, quantile_cvar, quantile_levels,
    shortfall_score, track_k, AugmentedState, DrlAgent, DrlVariant, KGrid, QuantileTable,
    DEFAULT_QUANTILES,
};
pub use iql::IqlTables;
pub use mix::{initial_mixture, mix_train, precomputed_risk_neutral, IqlSettings, MixConfig, MixTrainer};
pub use reinforce::reinforce_update;
pub use schedule::{AlphaSchedule, LinearDecay, DEFAULT_ALPHA_START};
pub use trainers::{rollout_batch, BatchReport, CvarPgTrainer, DrlSchedule, DrlTrainer, ReinforceTrainer, Trainer};
