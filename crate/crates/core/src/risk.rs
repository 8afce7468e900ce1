//! Empirical quantile and CVaR estimators over samples of returns.
//!
//! Conventions: the empirical alpha-quantile is the `ceil(alpha * N)`-th smallest
//! value, and the empirical CVaR is the mean of the `ceil(alpha * N)` smallest
//! values. Sorting is stable, so ties keep their original order.

use crate::error::{Error, Result};

/// Absorbs round-off in `alpha * n` (e.g. `0.7 * 10 = 7.000000000000001`).
const COUNT_SLACK: f64 = 1e-9;

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::contract(format!("alpha must lie in (0, 1], got {alpha}")))
    }
}

fn check_sample(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::contract("return sample is empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("return sample contains non-finite values"));
    }
    Ok(())
}

/// `ceil(alpha * n)`, at least 1 and at most `n`.
pub fn tail_count(n: usize, alpha: f64) -> usize {
    ((alpha * n as f64 - COUNT_SLACK).ceil() as usize).clamp(1, n.max(1))
}

/// Indices of `values` in ascending order of value; ties by index.
pub fn stable_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn empirical_quantile(values: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_sample(values)?;
    let k = tail_count(values.len(), alpha);
    Ok(sorted(values)[k - 1])
}

pub fn empirical_cvar(values: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_sample(values)?;
    let k = tail_count(values.len(), alpha);
    let s = sorted(values);
    Ok(s[..k].iter().sum::<f64>() / k as f64)
}

/// Maximise `k - E[(k - Z)^+] / alpha` over a grid of `k` values.
///
/// Returns `(k_star, value)`. Among grid points whose value is within round-off
/// of the maximum, the smallest `k` wins.
pub fn cvar_dual(values: &[f64], alpha: f64, k_grid: &[f64]) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    check_sample(values)?;
    if k_grid.is_empty() {
        return Err(Error::contract("k grid is empty"));
    }
    let n = values.len() as f64;
    let objective = |k: f64| {
        let shortfall: f64 = values.iter().map(|&z| (k - z).max(0.0)).sum();
        k - shortfall / (alpha * n)
    };
    let scored: Vec<(f64, f64)> = k_grid.iter().map(|&k| (k, objective(k))).collect();
    let best = scored.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * best.abs().max(1.0);
    let (k_star, value) = scored
        .iter()
        .filter(|p| p.1 >= best - tol)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .copied()
        .expect("grid is non-empty");
    Ok((k_star, value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileCurve {
    /// `(i / N, i-th smallest value)` for `i = 1..=N`.
    pub points: Vec<(f64, f64)>,
}

impl QuantileCurve {
    /// Two-column CSV with a `probability,value` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("probability,value\n");
        for (p, v) in &self.points {
            out.push_str(&format!("{p},{v}\n"));
        }
        out
    }

    /// Value at cumulative probability `alpha` (step interpolation).
    pub fn value_at(&self, alpha: f64) -> Result<f64> {
        check_alpha(alpha)?;
        let k = tail_count(self.points.len(), alpha);
        Ok(self.points[k - 1].1)
    }
}

pub fn quantile_curve(values: &[f64]) -> Result<QuantileCurve> {
    check_sample(values)?;
    let n = values.len() as f64;
    let points = stable_order(values)
        .into_iter()
        .enumerate()
        .map(|(i, idx)| ((i + 1) as f64 / n, values[idx]))
        .collect();
    Ok(QuantileCurve { points })
}

/// True when every one of the `ceil(alpha * N)` smallest returns equals the
/// empirical alpha-quantile, i.e. the CVaR policy-gradient estimate vanishes.
pub fn tail_flatness(values: &[f64], alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    check_sample(values)?;
    let k = tail_count(values.len(), alpha);
    let s = sorted(values);
    Ok(s[0] == s[k - 1])
}
