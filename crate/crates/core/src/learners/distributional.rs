//! Quantile-regression learners with CVaR action selection.

use crate::env::{Environment, Trajectory, Transition};
use crate::error::{Error, Result};
use crate::risk::tail_count;
use rand::Rng;

pub const DEFAULT_QUANTILES: usize = 80;

/// Midpoint levels `tau_j = (j - 0.5) / m`, `j = 1..m`.
pub fn quantile_levels(m: usize) -> Vec<f64> {
    (1..=m).map(|j| (j as f64 - 0.5) / m as f64).collect()
}

/// `m` sorted quantile values for every (state, action) row.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    num_states: usize,
    num_actions: usize,
    m: usize,
    levels: Vec<f64>,
    values: Vec<f64>,
}

impl QuantileTable {
    pub fn new(num_states: usize, num_actions: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::contract("quantile count must be positive"));
        }
        Ok(Self {
            num_states,
            num_actions,
            m,
            levels: quantile_levels(m),
            values: vec![0.0; num_states * num_actions * m],
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_quantiles(&self) -> usize {
        self.m
    }

    pub fn num_rows(&self) -> usize {
        self.num_states * self.num_actions
    }

    pub fn row_index(&self, state: usize, action: usize) -> usize {
        state * self.num_actions + action
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.values[index * self.m..(index + 1) * self.m]
    }

    pub fn get(&self, state: usize, action: usize) -> &[f64] {
        self.row(self.row_index(state, action))
    }

    /// Overwrites one row; the values are sorted on the way in.
    pub fn set(&mut self, state: usize, action: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.m {
            return Err(Error::contract(format!("expected {} quantiles, got {}", self.m, values.len())));
        }
        let i = self.row_index(state, action);
        let row = &mut self.values[i * self.m..(i + 1) * self.m];
        row.copy_from_slice(values);
        row.sort_by(f64::total_cmp);
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Table from raw row-major values; every row must already be sorted.
    pub fn from_values(num_states: usize, num_actions: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        let mut t = Self::new(num_states, num_actions, m)?;
        if values.len() != t.values.len() {
            return Err(Error::contract(format!(
                "quantile table needs {} values, got {}",
                t.values.len(),
                values.len()
            )));
        }
        t.values = values;
        if let Some(bad) = (0..t.num_rows()).find(|&r| !t.is_sorted_row(r)) {
            return Err(Error::contract(format!("quantile row {bad} is not sorted")));
        }
        Ok(t)
    }

    pub fn is_sorted_row(&self, index: usize) -> bool {
        self.row(index).windows(2).all(|w| w[0] <= w[1])
    }

    /// One pinball-loss step of every quantile in the row toward the sorted
    /// `targets`, followed by the crossing fix (re-sorting the row).
    pub fn pinball_step(&mut self, index: usize, targets: &[f64], lr: f64) {
        let k = targets.len() as f64;
        let row = &mut self.values[index * self.m..(index + 1) * self.m];
        for (z, tau) in row.iter_mut().zip(&self.levels) {
            let below = targets.partition_point(|t| *t < *z) as f64;
            *z += lr * (tau - below / k);
        }
        row.sort_by(f64::total_cmp);
    }
}

/// Mean of the lowest `ceil(alpha m)` quantiles.
pub fn quantile_cvar(row: &[f64], alpha: f64) -> f64 {
    let k = tail_count(row.len(), alpha);
    row[..k].iter().sum::<f64>() / k as f64
}

/// `-(1/m) sum_j max(k - z_j, 0)`.
pub fn shortfall_score(row: &[f64], k: f64) -> f64 {
    -row.iter().map(|z| (k - z).max(0.0)).sum::<f64>() / row.len() as f64
}

fn argmax_by(n: usize, score: impl Fn(usize) -> f64) -> usize {
    let mut best = 0;
    let mut best_score = score(0);
    for a in 1..n {
        let s = score(a);
        if s > best_score {
            best = a;
            best_score = s;
        }
    }
    best
}

fn epsilon_greedy<R: Rng + ?Sized>(num_actions: usize, epsilon: f64, rng: &mut R, greedy: impl FnOnce() -> usize) -> usize {
    let u: f64 = rng.random();
    if u < epsilon {
        rng.random_range(0..num_actions)
    } else {
        greedy()
    }
}

pub fn mkv_greedy(z: &QuantileTable, state: usize, alpha: f64) -> usize {
    argmax_by(z.num_actions, |a| quantile_cvar(z.get(state, a), alpha))
}

/// Epsilon-greedy over the per-action CVaR of the quantile rows.
pub fn drl_mkv_act<R: Rng + ?Sized>(z: &QuantileTable, state: usize, alpha: f64, epsilon: f64, rng: &mut R) -> usize {
    epsilon_greedy(z.num_actions, epsilon, rng, || mkv_greedy(z, state, alpha))
}

fn backup_targets(z: &QuantileTable, t: &Transition, next_row: usize, gamma: f64) -> Vec<f64> {
    if t.bootstraps() {
        z.row(next_row).iter().map(|q| t.reward + gamma * q).collect()
    } else {
        vec![t.reward; z.m]
    }
}

/// Distributional backup of row `(t.state, t.action)` toward `r + gamma Z(s', next_action)`.
/// Returns the updated row index.
pub fn drl_mkv_update(z: &mut QuantileTable, t: &Transition, next_action: usize, gamma: f64, lr: f64) -> usize {
    let targets = backup_targets(z, t, z.row_index(t.next_state, next_action), gamma);
    let row = z.row_index(t.state, t.action);
    z.pinball_step(row, &targets, lr);
    row
}

/// Tracking-variable recursion `(k - r) / gamma`, unclamped.
pub fn track_k(k: f64, reward: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::contract(format!("gamma must be positive, got {gamma}")));
    }
    Ok((k - reward) / gamma)
}

/// Uniform grid of tracking-variable values with nearest-bin lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGrid {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Default for KGrid {
    fn default() -> Self {
        Self { lo: -200.0, hi: 20.0, bins: 64 }
    }
}

impl KGrid {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo < hi) || bins < 2 {
            return Err(Error::contract("k-grid needs lo < hi and at least two bins"));
        }
        Ok(Self { lo, hi, bins })
    }

    fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.bins - 1) as f64
    }

    pub fn value(&self, bin: usize) -> f64 {
        self.lo + bin as f64 * self.spacing()
    }

    pub fn clamp(&self, k: f64) -> f64 {
        k.clamp(self.lo, self.hi)
    }

    pub fn bin(&self, k: f64) -> usize {
        let pos = ((self.clamp(k) - self.lo) / self.spacing()).round();
        (pos as usize).min(self.bins - 1)
    }
}

/// Base state plus discretized tracking variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentedState {
    pub state: usize,
    pub k_bin: usize,
}

impl AugmentedState {
    pub fn new(state: usize, k: f64, grid: &KGrid) -> Self {
        Self { state, k_bin: grid.bin(k) }
    }

    /// Row-major index into a table over `num_states * grid.bins` augmented states.
    pub fn index(&self, grid: &KGrid) -> usize {
        self.state * grid.bins + self.k_bin
    }
}

pub fn lim_greedy(z: &QuantileTable, aug: usize, k: f64) -> usize {
    argmax_by(z.num_actions, |a| shortfall_score(z.get(aug, a), k))
}

/// Epsilon-greedy over `-E[(k - Z(s~, a))^+]` at the augmented state for `k`.
pub fn drl_lim_act<R: Rng + ?Sized>(
    z: &QuantileTable,
    grid: &KGrid,
    state: usize,
    k: f64,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    let aug = AugmentedState::new(state, k, grid).index(grid);
    epsilon_greedy(z.num_actions, epsilon, rng, || lim_greedy(z, aug, k))
}

/// Distributional backup on the augmented table. `k` is the tracking value at
/// `t.state`; the next action is picked greedily at the propagated value.
/// Returns the updated row and the propagated (clamped) `k`.
pub fn drl_lim_update(
    z: &mut QuantileTable,
    grid: &KGrid,
    t: &Transition,
    k: f64,
    gamma: f64,
    lr: f64,
) -> Result<(usize, f64)> {
    let next_k = grid.clamp(track_k(k, t.reward, gamma)?);
    let next_aug = AugmentedState::new(t.next_state, next_k, grid).index(grid);
    let next_action = lim_greedy(z, next_aug, next_k);
    let targets = backup_targets(z, t, z.row_index(next_aug, next_action), gamma);
    let aug = AugmentedState::new(t.state, k, grid).index(grid);
    let row = z.row_index(aug, t.action);
    z.pinball_step(row, &targets, lr);
    Ok((row, next_k))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrlVariant {
    /// Per-step CVaR action selection.
    Markov,
    /// Tracking-variable action selection on the augmented state space.
    Tracking(KGrid),
}

/// A tabular distributional agent that learns online from its own episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DrlAgent {
    variant: DrlVariant,
    table: QuantileTable,
    num_states: usize,
    alpha: f64,
    gamma: f64,
    lr: f64,
    k0: f64,
}

impl DrlAgent {
    pub fn new(
        variant: DrlVariant,
        num_states: usize,
        num_actions: usize,
        m: usize,
        alpha: f64,
        gamma: f64,
        lr: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::contract(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(gamma > 0.0) || !(lr > 0.0) {
            return Err(Error::contract("gamma and lr must be positive"));
        }
        let rows = match variant {
            DrlVariant::Markov => num_states,
            DrlVariant::Tracking(grid) => num_states * grid.bins,
        };
        Ok(Self {
            variant,
            table: QuantileTable::new(rows, num_actions, m)?,
            num_states,
            alpha,
            gamma,
            lr,
            k0: 0.0,
        })
    }

    pub fn with_table(mut self, table: QuantileTable) -> Result<Self> {
        if table.num_rows() != self.table.num_rows() || table.num_quantiles() != self.table.num_quantiles() {
            return Err(Error::contract("quantile table shape does not match the agent"));
        }
        self.table = table;
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn variant(&self) -> DrlVariant {
        self.variant
    }

    pub fn table(&self) -> &QuantileTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut QuantileTable {
        &mut self.table
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn set_alpha(&mut self, alpha: f64) {
        self.alpha = alpha;
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn set_k0(&mut self, k0: f64) {
        self.k0 = match self.variant {
            DrlVariant::Tracking(grid) => grid.clamp(k0),
            DrlVariant::Markov => k0,
        };
    }

    pub fn act<R: Rng + ?Sized>(&self, state: usize, k: f64, epsilon: f64, rng: &mut R) -> usize {
        match self.variant {
            DrlVariant::Markov => drl_mkv_act(&self.table, state, self.alpha, epsilon, rng),
            DrlVariant::Tracking(grid) => drl_lim_act(&self.table, &grid, state, k, epsilon, rng),
        }
    }

    /// Tracking value after observing `t` from tracking value `k`.
    pub fn next_k(&self, k: f64, t: &Transition) -> Result<f64> {
        match self.variant {
            DrlVariant::Markov => Ok(k),
            DrlVariant::Tracking(grid) => Ok(grid.clamp(track_k(k, t.reward, self.gamma)?)),
        }
    }

    /// One backup from `t`. Returns the updated row index.
    pub fn learn(&mut self, t: &Transition, k: f64) -> Result<usize> {
        match self.variant {
            DrlVariant::Markov => {
                let next = mkv_greedy(&self.table, t.next_state, self.alpha);
                Ok(drl_mkv_update(&mut self.table, t, next, self.gamma, self.lr))
            }
            DrlVariant::Tracking(grid) => {
                Ok(drl_lim_update(&mut self.table, &grid, t, k, self.gamma, self.lr)?.0)
            }
        }
    }

    /// Runs one epsilon-greedy episode from `k0`, learning after every step.
    /// `on_update` sees the table and the row just updated.
    pub fn run_episode<E, R1, R2>(
        &mut self,
        env: &E,
        epsilon: f64,
        env_rng: &mut R1,
        explore_rng: &mut R2,
        mut on_update: impl FnMut(&QuantileTable, usize),
    ) -> Result<Trajectory>
    where
        E: Environment + ?Sized,
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let max_len = env.max_episode_len();
        let mut transitions = Vec::new();
        let mut state = env.initial_state();
        let mut k = self.k0;
        for step in 0..max_len {
            let action = self.act(state, k, epsilon, explore_rng);
            let t = budgeted_step(env, state, action, step + 1 == max_len, env_rng)?;
            let row = self.learn(&t, k)?;
            on_update(&self.table, row);
            transitions.push(t);
            if t.done {
                break;
            }
            k = self.next_k(k, &t)?;
            state = t.next_state;
        }
        Ok(Trajectory::from_transitions(transitions, env.discount()))
    }

    /// One episode without learning.
    pub fn rollout<E, R1, R2>(&self, env: &E, epsilon: f64, env_rng: &mut R1, explore_rng: &mut R2) -> Result<Trajectory>
    where
        E: Environment + ?Sized,
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let max_len = env.max_episode_len();
        let mut transitions = Vec::new();
        let mut state = env.initial_state();
        let mut k = self.k0;
        for step in 0..max_len {
            let action = self.act(state, k, epsilon, explore_rng);
            let t = budgeted_step(env, state, action, step + 1 == max_len, env_rng)?;
            transitions.push(t);
            if t.done {
                break;
            }
            k = self.next_k(k, &t)?;
            state = t.next_state;
        }
        Ok(Trajectory::from_transitions(transitions, env.discount()))
    }
}

fn budgeted_step<E, R>(env: &E, state: usize, action: usize, last: bool, rng: &mut R) -> Result<Transition>
where
    E: Environment + ?Sized,
    R: Rng + ?Sized,
{
    let mut t = env.step(state, action, rng)?;
    if !t.done && last {
        t.done = true;
        t.truncated = true;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::*;

    fn terminal(state: usize, action: usize, reward: f64) -> Transition {
        Transition { state, action, reward, next_state: state, done: true, truncated: false }
    }

    #[test]
    fn levels_are_midpoints() {
        assert_eq!(quantile_levels(4), vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn mkv_action_examples() {
        let mut z = QuantileTable::new(1, 2, 5).unwrap();
        z.set(0, 0, &[1.0; 5]).unwrap();
        z.set(0, 1, &[0.0, 2.0, 2.0, 2.0, 2.0]).unwrap();
        let mut rng = stream_rng(0, Stream::Exploration);
        assert_eq!(drl_mkv_act(&z, 0, 0.2, 0.0, &mut rng), 0);
        assert_eq!(drl_mkv_act(&z, 0, 1.0, 0.0, &mut rng), 1);
        z.set(0, 1, &[1.0; 5]).unwrap();
        assert_eq!(drl_mkv_act(&z, 0, 0.2, 0.0, &mut rng), 0);
    }

    #[test]
    fn terminal_backups_collapse_to_reward() {
        let mut z = QuantileTable::new(1, 1, 8).unwrap();
        let t = terminal(0, 0, 2.5);
        for lr in [0.1, 0.01, 0.001, 0.0001] {
            for _ in 0..20_000 {
                drl_mkv_update(&mut z, &t, 0, 0.9, lr);
            }
        }
        assert!(z.row(0).iter().all(|q| (q - 2.5).abs() < 1e-3), "{:?}", z.row(0));
    }

    #[test]
    fn track_examples() {
        assert_eq!(track_k(5.0, 2.0, 1.0).unwrap(), 3.0);
        assert_eq!(track_k(0.0, 0.0, 0.5).unwrap(), 0.0);
        assert!((track_k(10.0, -1.0, 0.999).unwrap() - 11.011011).abs() < 1e-6);
        assert!(track_k(1.0, 0.0, 0.0).is_err());
        let grid = KGrid::default();
        assert_eq!(grid.clamp(track_k(10.0, -1.0, 0.999).unwrap()), 11.011_011_011_011_01);
        assert_eq!(grid.clamp(1e6), 20.0);
        assert_eq!(grid.bin(-1e6), 0);
        assert_eq!(grid.bin(20.0), 63);
        assert_eq!(grid.value(63), 20.0);
    }

    #[test]
    fn lim_action_examples() {
        let grid = KGrid::new(-1.0, 1.0, 3).unwrap();
        let mut z = QuantileTable::new(grid.bins, 2, 2).unwrap();
        let aug = AugmentedState::new(0, 0.0, &grid);
        z.set(aug.index(&grid), 0, &[-1.0, 1.0]).unwrap();
        z.set(aug.index(&grid), 1, &[-2.0, 5.0]).unwrap();
        let mut rng = stream_rng(0, Stream::Exploration);
        assert_eq!(shortfall_score(z.get(aug.index(&grid), 0), 0.0), -0.5);
        assert_eq!(shortfall_score(z.get(aug.index(&grid), 1), 0.0), -1.0);
        assert_eq!(drl_lim_act(&z, &grid, 0, 0.0, 0.0, &mut rng), 0);

        let low = AugmentedState::new(0, -1.0, &grid).index(&grid);
        z.set(low, 0, &[3.0, 4.0]).unwrap();
        z.set(low, 1, &[0.0, 9.0]).unwrap();
        assert_eq!(drl_lim_act(&z, &grid, 0, -1.0, 0.0, &mut rng), 0);
    }

    #[test]
    fn lim_single_step_picks_best_reward() {
        let grid = KGrid::new(-5.0, 5.0, 11).unwrap();
        let mut z = QuantileTable::new(grid.bins, 3, 4).unwrap();
        let rewards = [1.0, 3.0, 2.0];
        for _ in 0..5000 {
            for (a, r) in rewards.iter().enumerate() {
                for bin in 0..grid.bins {
                    let t = terminal(0, a, *r);
                    drl_lim_update(&mut z, &grid, &t, grid.value(bin), 1.0, 0.05).unwrap();
                }
            }
        }
        let mut rng = stream_rng(0, Stream::Exploration);
        assert_eq!(drl_lim_act(&z, &grid, 0, 3.0, 0.0, &mut rng), 1);
    }

    proptest! {
        #[test]
        fn rows_stay_sorted(
            init in prop::collection::vec(-5.0f64..5.0, 6),
            next in prop::collection::vec(-5.0f64..5.0, 6),
            reward in -10.0f64..10.0,
            lr in 0.0f64..50.0,
            done in any::<bool>(),
        ) {
            let mut z = QuantileTable::new(2, 1, 6).unwrap();
            z.set(0, 0, &init).unwrap();
            z.set(1, 0, &next).unwrap();
            let t = Transition { state: 0, action: 0, reward, next_state: 1, done, truncated: false };
            let row = drl_mkv_update(&mut z, &t, 0, 0.99, lr);
            prop_assert!(z.is_sorted_row(row));
        }
    }
}
