//! Golden checks runnable from the command line.

use super::{bfs_path_lengths, enumerate_returns, exact_cvar, finite_diff_logp, shortest_route};
use super::{FiniteReturnDistribution, NoiseGrid, DEFAULT_ATOM_CAP};
use crate::env::{run_episode, Environment, Maze, RiskyBandit};
use crate::error::{Error, Result};
use crate::policy::{value_iteration, MixturePolicy, ScorePolicy, SoftmaxPolicy, TablePolicy, WeightMode};
use crate::risk::empirical_cvar;
use crate::rng::{stream_rng, Stream};
use rand::Rng;

pub const SUITES: [&str; 5] = ["maze", "bandit", "estimators", "gradients", "all"];

pub const RING_LONG_RETURN: f64 = -0.054670988154308375;
pub const RING_SHORT_MEAN: f64 = 1.9482235106434675;
pub const RING_SHORT_CVAR_10: f64 = -50.35982236119404;
pub const CORRIDOR_SHORT_MEAN: f64 = 3.9551298151439394;
pub const CORRIDOR_SHORT_CVAR_10: f64 = -48.51015456645049;
pub const NOISE_GRID_CVAR_10: f64 = -1.7540998517295476;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.to_string(), passed, detail }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> CheckResult {
    check(name, (got - want).abs() <= tol, format!("got {got:.6}, expected {want:.6} +/- {tol}"))
}

pub fn run_suite(name: &str) -> Result<Vec<CheckResult>> {
    match name {
        "maze" => maze_checks(),
        "bandit" => bandit_checks(),
        "estimators" => estimator_checks(),
        "gradients" => gradient_checks(),
        "all" => {
            let mut out = maze_checks()?;
            out.extend(bandit_checks()?);
            out.extend(estimator_checks()?);
            out.extend(gradient_checks()?);
            Ok(out)
        }
        other => Err(Error::contract(format!(
            "unknown oracle suite `{other}`; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

/// Deterministic table policy following the BFS route (uniform elsewhere).
pub fn route_policy(maze: &Maze, via_red: bool) -> Result<TablePolicy> {
    let spec = maze.spec();
    let route = shortest_route(spec, via_red)?;
    let na = maze.num_actions();
    let mut rows = vec![1.0 / na as f64; maze.num_states() * na];
    for (cell, mv) in route {
        let s = spec.state_id(cell);
        for a in 0..na {
            rows[s * na + a] = if a == mv.id() { 1.0 } else { 0.0 };
        }
    }
    TablePolicy::from_rows(na, rows)
}

pub fn route_distribution(maze: &Maze, via_red: bool, noise: &NoiseGrid) -> Result<FiniteReturnDistribution> {
    let policy = route_policy(maze, via_red)?;
    enumerate_returns(&maze.model()?, &policy, noise, maze.max_episode_len(), DEFAULT_ATOM_CAP)
}

fn maze_checks() -> Result<Vec<CheckResult>> {
    let noise = NoiseGrid::default();
    let ring = Maze::canonical();
    let corridor = Maze::central_corridor();
    let mut out = Vec::new();

    let (red, safe) = bfs_path_lengths(ring.spec())?;
    out.push(check("maze.bfs.default", (red, safe) == (9, 11), format!("red {red}, safe {safe}")));
    let (red, safe) = bfs_path_lengths(corridor.spec())?;
    out.push(check("maze.bfs.corridor", (red, safe) == (7, 11), format!("red {red}, safe {safe}")));

    let long = route_distribution(&ring, false, &noise)?;
    out.push(check(
        "maze.long_path.single_atom",
        long.atoms().len() == 1,
        format!("{} atoms", long.atoms().len()),
    ));
    out.push(close("maze.long_path.return", long.mean(), RING_LONG_RETURN, 1e-9));

    let short = route_distribution(&ring, true, &noise)?;
    out.push(check(
        "maze.short_path.atoms",
        short.atoms().len() == noise.len(),
        format!("{} atoms", short.atoms().len()),
    ));
    out.push(close("maze.short_path.mean", short.mean(), RING_SHORT_MEAN, 1e-9));
    let short_cvar = exact_cvar(&short, 0.1)?;
    out.push(close("maze.short_path.cvar", short_cvar, RING_SHORT_CVAR_10, 0.1));
    let long_cvar = exact_cvar(&long, 0.1)?;
    out.push(check(
        "maze.cvar_vs_mean_ordering",
        long_cvar > short_cvar && long.mean() < short.mean(),
        format!(
            "CVaR long {long_cvar:.3} vs short {short_cvar:.3}; mean long {:.3} vs short {:.3}",
            long.mean(),
            short.mean()
        ),
    ));

    let cshort = route_distribution(&corridor, true, &noise)?;
    out.push(close("maze.corridor.short_mean", cshort.mean(), CORRIDOR_SHORT_MEAN, 1e-3));
    out.push(close("maze.corridor.short_cvar", exact_cvar(&cshort, 0.1)?, CORRIDOR_SHORT_CVAR_10, 0.1));

    for (label, maze, expect) in [("default", &ring, red_len(&ring)?), ("corridor", &corridor, 7)] {
        let q = value_iteration(&maze.model()?, maze.discount(), 1e-10)?;
        let greedy: Vec<usize> = (0..maze.num_states()).map(|s| q.greedy(s)).collect();
        let policy = TablePolicy::deterministic(maze.num_actions(), &greedy);
        let mut rng = stream_rng(0, Stream::Evaluation);
        let traj = run_episode(maze, &policy, &mut rng)?;
        let red = maze.spec().state_id(maze.spec().red);
        out.push(check(
            &format!("maze.value_iteration.{label}"),
            traj.len() == expect && traj.visits(red),
            format!("greedy rollout length {}, visits red {}", traj.len(), traj.visits(red)),
        ));
    }
    Ok(out)
}

fn red_len(maze: &Maze) -> Result<usize> {
    Ok(bfs_path_lengths(maze.spec())?.0)
}

fn bandit_checks() -> Result<Vec<CheckResult>> {
    let bandit = RiskyBandit::new();
    let noise = NoiseGrid::new(1);
    let uniform = TablePolicy::uniform(2, 2);
    let d = enumerate_returns(&bandit.model()?, &uniform, &noise, 1, DEFAULT_ATOM_CAP)?;
    let expect = [(-10.0, 0.05), (1.0, 0.5), (3.0, 0.45)];
    let ok = d.atoms().len() == 3
        && d.atoms().iter().zip(expect).all(|(a, e)| (a.0 - e.0).abs() < 1e-12 && (a.1 - e.1).abs() < 1e-12);
    let mut out = vec![check("bandit.uniform_atoms", ok, format!("{:?}", d.atoms()))];
    let b = FiniteReturnDistribution::new(vec![(3.0, 0.9), (-10.0, 0.1)])?;
    let a = FiniteReturnDistribution::new(vec![(1.0, 1.0)])?;
    for (alpha, want) in [(0.1, -10.0), (0.2, -3.5), (1.0, 1.7)] {
        out.push(close(&format!("bandit.exact_cvar.{alpha}"), exact_cvar(&b, alpha)?, want, 1e-12));
    }
    out.push(check(
        "bandit.optimal_actions_differ",
        exact_cvar(&a, 0.1)? > exact_cvar(&b, 0.1)? && a.mean() < b.mean(),
        "safe arm wins on CVaR, risky arm on mean".into(),
    ));
    Ok(out)
}

/// Result of comparing a Monte Carlo CVaR estimate with the exact value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloAgreement {
    pub estimate: f64,
    pub exact: f64,
    /// Bootstrap standard error of the plug-in estimate.
    pub standard_error: f64,
}

impl MonteCarloAgreement {
    /// `|estimate - exact| <= 3 se`, with slack for float round-off.
    pub fn within_three_se(&self) -> bool {
        (self.estimate - self.exact).abs() <= 3.0 * self.standard_error + 1e-9
    }
}

/// Draws `draws` seeded samples from `dist` and compares the plug-in CVaR with
/// the exact value. The standard error comes from `resamples` bootstrap
/// replicates, because the spread of the tail values alone misses the
/// fluctuation of the tail boundary when an atom sits exactly at `alpha`.
pub fn monte_carlo_agreement(
    dist: &FiniteReturnDistribution,
    alpha: f64,
    draws: usize,
    resamples: usize,
    seed: u64,
) -> Result<MonteCarloAgreement> {
    let mut rng = stream_rng(seed, Stream::Evaluation);
    let mut sample: Vec<f64> = (0..draws).map(|_| dist.sample(&mut rng)).collect();
    let estimate = empirical_cvar(&sample, alpha)?;
    sample.sort_by(f64::total_cmp);
    let k = crate::risk::tail_count(draws, alpha);
    let mut boot = Vec::with_capacity(resamples);
    let mut idx = vec![0u32; draws];
    for _ in 0..resamples {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..draws as u32);
        }
        // The sample is sorted, so sorted indices give sorted values.
        idx.sort_unstable();
        boot.push(idx[..k].iter().map(|&i| sample[i as usize]).sum::<f64>() / k as f64);
    }
    let mean = boot.iter().sum::<f64>() / boot.len().max(1) as f64;
    let var = boot.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (boot.len().max(2) - 1) as f64;
    Ok(MonteCarloAgreement { estimate, exact: exact_cvar(dist, alpha)?, standard_error: var.sqrt() })
}

fn estimator_checks() -> Result<Vec<CheckResult>> {
    let b = FiniteReturnDistribution::new(vec![(3.0, 0.9), (-10.0, 0.1)])?;
    let mut out = Vec::new();
    for alpha in [0.1, 0.2, 1.0] {
        let m = monte_carlo_agreement(&b, alpha, 100_000, 200, 4)?;
        out.push(check(
            &format!("estimators.monte_carlo.{alpha}"),
            m.within_three_se(),
            format!("estimate {:.5}, exact {:.5}, 3 se {:.5}", m.estimate, m.exact, 3.0 * m.standard_error),
        ));
    }
    let grid = NoiseGrid::default();
    let normal = FiniteReturnDistribution::new(grid.values().iter().map(|z| (*z, grid.prob())).collect())?;
    out.push(close("estimators.noise_grid_cvar", exact_cvar(&normal, 0.1)?, NOISE_GRID_CVAR_10, 1e-9));
    out.push(close("estimators.noise_grid_cvar_vs_normal", exact_cvar(&normal, 0.1)?, -1.755, 2e-3));
    Ok(out)
}

/// Largest relative error between analytic and finite-difference scores over
/// `draws` random parameter vectors.
pub fn max_gradient_error<P, F>(draws: usize, seed: u64, num_states: usize, mut make: F) -> Result<f64>
where
    P: ScorePolicy + Clone,
    F: FnMut(&mut dyn rand::RngCore) -> P,
{
    let mut rng = stream_rng(seed, Stream::PolicyInit);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let policy = make(&mut rng);
        let s = rng.random_range(0..num_states);
        for a in 0..policy.num_actions() {
            let analytic = policy.log_grad(s, a)?;
            let numeric = finite_diff_logp(&policy, s, a, 1e-5)?;
            worst = worst.max(relative_error(&analytic, &numeric));
        }
    }
    Ok(worst)
}

/// `max_i |a_i - b_i| / max(1e-3, max_j |a_j|)`.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().fold(1e-3_f64, |m, v| m.max(v.abs()));
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max)
        / scale
}

fn gradient_checks() -> Result<Vec<CheckResult>> {
    let (ns, na) = (3, 4);
    let soft = max_gradient_error(100, 11, ns, |rng| {
        let theta = (0..ns * na).map(|_| rng.random_range(-3.0..3.0)).collect();
        SoftmaxPolicy::from_theta(ns, na, theta).expect("sized")
    })?;
    let mut out = vec![check("gradients.softmax", soft < 1e-6, format!("max relative error {soft:.2e}"))];
    for mode in [WeightMode::PerAction, WeightMode::PerState] {
        let err = max_gradient_error(100, 12, ns, |rng| random_mixture(rng, ns, na, mode))?;
        out.push(check(
            &format!("gradients.mixture.{}", mode.name()),
            err < 1e-6,
            format!("max relative error {err:.2e}"),
        ));
    }
    Ok(out)
}

/// Mixture with random logits in [-3, 3] and a random strictly positive table.
pub fn random_mixture(rng: &mut dyn rand::RngCore, ns: usize, na: usize, mode: WeightMode) -> MixturePolicy {
    let n2 = if mode == WeightMode::PerAction { ns * na } else { ns };
    let params = (0..ns * na + n2).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mut table = Vec::with_capacity(ns * na);
    for _ in 0..ns {
        let row: Vec<f64> = (0..na).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = row.iter().sum();
        table.extend(row.iter().map(|v| v / total));
    }
    MixturePolicy::from_params(ns, na, mode, params, table).expect("sized")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_golden_checks_pass() {
        for c in run_suite("all").unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
        assert!(run_suite("nope").is_err());
    }
}
