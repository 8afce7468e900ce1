//! Experiment runner for the cvarmix learners: JSON configs, seeded
//! multi-run training, metrics CSVs, aggregation and quantile-curve export.

pub mod aggregate;
pub mod config;
pub mod curve;
pub mod error;
pub mod experiment;
pub mod metrics;

pub use aggregate::{aggregate, metrics_files, Summary};
pub use config::{parse_config, parse_config_str, Algorithm, EnvName, ExperimentConfig};
pub use curve::{check_compatible, dump_quantile_curve, rollout_curve};
pub use error::{BenchError, Result};
pub use experiment::{build_trainer, checkpoint_path, metrics_path, run_experiment};
pub use metrics::{MetricsRow, COLUMNS};
