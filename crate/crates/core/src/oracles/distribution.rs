use super::NoiseGrid;
use crate::env::{Reward, TabularMdp};
use crate::error::{Error, Result};
use crate::policy::Policy;
use rand::Rng;

pub const DEFAULT_ATOM_CAP: usize = 1_000_000;
const MERGE_TOL: f64 = 1e-12;

/// Discrete law as sorted `(value, probability)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteReturnDistribution {
    atoms: Vec<(f64, f64)>,
}

fn merge_sorted(atoms: &mut Vec<(f64, f64)>) {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for &(v, p) in atoms.iter() {
        match merged.last_mut() {
            Some(last) if (v - last.0).abs() < MERGE_TOL => last.1 += p,
            _ => merged.push((v, p)),
        }
    }
    *atoms = merged;
}

impl FiniteReturnDistribution {
    /// Sorts the atoms, merges values closer than 1e-12 and checks the total mass.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::contract("distribution needs at least one atom"));
        }
        if atoms.iter().any(|(v, p)| !v.is_finite() || !(*p >= 0.0)) {
            return Err(Error::contract("atoms need finite values and nonnegative probabilities"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!("atom probabilities sum to {total}")));
        }
        merge_sorted(&mut atoms);
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_prob(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(v, p)| v * p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.total_prob();
        let mut acc = 0.0;
        for &(v, p) in &self.atoms {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,probability\n");
        for (v, p) in &self.atoms {
            out.push_str(&format!("{v},{p}\n"));
        }
        out
    }
}

/// Lower-tail mean of the atomic law, splitting the atom that straddles `alpha`.
pub fn exact_cvar(dist: &FiniteReturnDistribution, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::contract(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let total = dist.total_prob();
    let mut remaining = alpha * total;
    let mut acc = 0.0;
    for &(v, p) in dist.atoms() {
        let take = p.min(remaining);
        acc += v * take;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }
    Ok(acc / (alpha * total))
}

/// Exact law of the discounted return of `policy` on `model`, with every
/// Gaussian reward replaced by `mean + scale * z` over the noise grid.
///
/// Episodes stop at absorbing states or after `max_len` steps. Fails with a
/// diagnostic once more than `atom_cap` partial or finished atoms are alive.
pub fn enumerate_returns<P: Policy + ?Sized>(
    model: &TabularMdp,
    policy: &P,
    noise: &NoiseGrid,
    max_len: usize,
    atom_cap: usize,
) -> Result<FiniteReturnDistribution> {
    // Frontier entries: (state, return so far, probability).
    let mut frontier = vec![(model.initial_state(), 0.0_f64, 1.0_f64)];
    let mut finished: Vec<(f64, f64)> = Vec::new();
    let mut discount = 1.0;
    for _ in 0..max_len {
        let mut next = Vec::new();
        for &(s, g, p) in &frontier {
            if model.is_absorbing(s) {
                finished.push((g, p));
                continue;
            }
            let dist = policy.action_probs(s);
            dist.check()?;
            for (a, pa) in dist.probs().iter().enumerate() {
                if *pa == 0.0 {
                    continue;
                }
                for o in model.outcomes(s, a) {
                    let q = p * pa * o.prob;
                    if q == 0.0 {
                        continue;
                    }
                    match o.reward {
                        Reward::Fixed(r) => next.push((o.next, g + discount * r, q)),
                        Reward::Gaussian { mean, scale } => {
                            let qz = q * noise.prob();
                            for z in noise.values() {
                                next.push((o.next, g + discount * (mean + scale * z), qz));
                            }
                        }
                    }
                }
            }
            if next.len() + finished.len() > atom_cap {
                return Err(Error::diagnostic(format!(
                    "return enumeration exceeded {atom_cap} atoms; use a smaller noise grid or a deterministic policy"
                )));
            }
        }
        frontier = merge_frontier(next);
        discount *= model.discount();
        if frontier.is_empty() {
            break;
        }
    }
    finished.extend(frontier.into_iter().map(|(_, g, p)| (g, p)));
    FiniteReturnDistribution::new(finished)
}

fn merge_frontier(mut nodes: Vec<(usize, f64, f64)>) -> Vec<(usize, f64, f64)> {
    nodes.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(usize, f64, f64)> = Vec::with_capacity(nodes.len());
    for (s, g, p) in nodes {
        match out.last_mut() {
            Some(last) if last.0 == s && (g - last.1).abs() < MERGE_TOL => last.2 += p,
            _ => out.push((s, g, p)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_point() -> FiniteReturnDistribution {
        FiniteReturnDistribution::new(vec![(3.0, 0.9), (-10.0, 0.1)]).unwrap()
    }

    #[test]
    fn cvar_examples() {
        let d = two_point();
        assert!((exact_cvar(&d, 0.1).unwrap() + 10.0).abs() < 1e-12);
        assert!((exact_cvar(&d, 0.2).unwrap() + 3.5).abs() < 1e-12);
        assert!((exact_cvar(&d, 1.0).unwrap() - 1.7).abs() < 1e-12);
        assert!(exact_cvar(&d, 0.0).is_err());
        assert!(exact_cvar(&d, 1.5).is_err());
    }

    #[test]
    fn merges_close_atoms() {
        let d = FiniteReturnDistribution::new(vec![(1.0, 0.25), (1.0 + 1e-13, 0.25), (0.0, 0.5)]).unwrap();
        assert_eq!(d.atoms().len(), 2);
        assert_eq!(d.atoms()[0], (0.0, 0.5));
        assert!(FiniteReturnDistribution::new(vec![(1.0, 0.5)]).is_err());
    }

    fn dist_strategy() -> impl Strategy<Value = FiniteReturnDistribution> {
        prop::collection::vec((-50.0f64..50.0, 0.01f64..1.0), 1..12).prop_map(|raw| {
            let total: f64 = raw.iter().map(|a| a.1).sum();
            FiniteReturnDistribution::new(raw.into_iter().map(|(v, p)| (v, p / total)).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(d in dist_strategy(), a in 0.01f64..1.0, b in 0.01f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (x, y) = (exact_cvar(&d, lo).unwrap(), exact_cvar(&d, hi).unwrap());
            prop_assert!(x <= y + 1e-9);
            prop_assert!(y <= d.mean() + 1e-9);
            prop_assert!((exact_cvar(&d, 1.0).unwrap() - d.mean()).abs() < 1e-9);
        }
    }
}
