//! Per-batch metrics rows.

use cvarmix_core::env::{EnvKind, Trajectory};
use cvarmix_core::learners::BatchReport;
use cvarmix_core::risk::empirical_cvar;
use serde::{Deserialize, Serialize};

/// Column order of every metrics CSV.
pub const COLUMNS: [&str; 10] = [
    "batch_index",
    "episodes_so_far",
    "mean_return",
    "cvar_alpha_return",
    "risk_averse_rate",
    "red_visit_rate",
    "goal_rate",
    "grad_norm",
    "alpha_current",
    "wallclock_seconds",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// 1-based.
    pub batch_index: usize,
    pub episodes_so_far: usize,
    pub mean_return: f64,
    /// Empirical CVaR of the batch returns at the configured target level.
    pub cvar_alpha_return: f64,
    pub risk_averse_rate: f64,
    /// Maze: episodes that entered the red cell. Bandit: risky-arm pulls.
    pub red_visit_rate: f64,
    pub goal_rate: f64,
    /// NaN for the distributional learners.
    pub grad_norm: f64,
    pub alpha_current: f64,
    pub wallclock_seconds: f64,
}

fn rate(trajectories: &[Trajectory], hit: impl Fn(&Trajectory) -> bool) -> f64 {
    trajectories.iter().filter(|t| hit(t)).count() as f64 / trajectories.len() as f64
}

impl MetricsRow {
    /// `batch_index` is 0-based here; the row stores it 1-based.
    pub fn from_report(
        env: &EnvKind,
        report: &BatchReport,
        batch_index: usize,
        target_alpha: f64,
        wallclock_seconds: f64,
    ) -> cvarmix_core::Result<Self> {
        let trajs = &report.trajectories;
        let returns: Vec<f64> = trajs.iter().map(|t| t.total_return).collect();
        let n = trajs.len();
        Ok(Self {
            batch_index: batch_index + 1,
            episodes_so_far: (batch_index + 1) * n,
            mean_return: returns.iter().sum::<f64>() / n as f64,
            cvar_alpha_return: empirical_cvar(&returns, target_alpha)?,
            risk_averse_rate: rate(trajs, |t| env.flags(t).risk_averse),
            red_visit_rate: rate(trajs, |t| env.flags(t).risky),
            goal_rate: rate(trajs, |t| env.flags(t).reached_goal),
            grad_norm: report.grad_norm,
            alpha_current: report.alpha,
            wallclock_seconds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_columns() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(MetricsRow {
            batch_index: 1,
            episodes_so_far: 50,
            mean_return: 0.0,
            cvar_alpha_return: 0.0,
            risk_averse_rate: 0.0,
            red_visit_rate: 0.0,
            goal_rate: 0.0,
            grad_norm: f64::NAN,
            alpha_current: 0.1,
            wallclock_seconds: 0.0,
        })
        .unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    }
}
