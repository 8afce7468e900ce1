//! Brute-force reference computations used to verify the estimators and learners.

mod bfs;
mod distribution;
mod gradient;
mod noise;
pub mod suite;

pub use bfs::{bfs_path_lengths, shortest_route};
pub use distribution::{enumerate_returns, exact_cvar, FiniteReturnDistribution, DEFAULT_ATOM_CAP};
pub use gradient::finite_diff_logp;
pub use noise::NoiseGrid;
