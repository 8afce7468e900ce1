//! Plain-text parameter checkpoints.
//!
//! ```text
//! cvarmix-checkpoint 1
//! kind mixture
//! num_states 36
//! num_actions 4
//! weight_mode per_action
//! vector params 288
//! <one value per line>
//! vector risk_neutral 144
//! ...
//! ```
//! Values are written in shortest round-trip form, so save/load is lossless.

use crate::env::{EnvKind, Trajectory, run_episode};
use crate::error::{Error, Result};
use crate::learners::{DrlAgent, DrlVariant, KGrid, QuantileTable};
use crate::policy::{MixturePolicy, ScorePolicy, SoftmaxPolicy, WeightMode};
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "cvarmix-checkpoint 1";

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Softmax(SoftmaxPolicy),
    Mixture(MixturePolicy),
    Quantile(DrlAgent),
}

impl Checkpoint {
    pub fn kind(&self) -> &'static str {
        match self {
            Checkpoint::Softmax(_) => "softmax",
            Checkpoint::Mixture(_) => "mixture",
            Checkpoint::Quantile(_) => "quantile",
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Checkpoint::Softmax(p) => p.features().num_states,
            Checkpoint::Mixture(p) => p.features().num_states,
            Checkpoint::Quantile(a) => a.num_states(),
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            Checkpoint::Softmax(p) => p.features().num_actions,
            Checkpoint::Mixture(p) => p.features().num_actions,
            Checkpoint::Quantile(a) => a.table().num_actions(),
        }
    }

    /// One greedy-or-stochastic episode of the stored policy (distributional
    /// agents act greedily).
    pub fn rollout<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &self,
        env: &EnvKind,
        env_rng: &mut R1,
        explore_rng: &mut R2,
    ) -> Result<Trajectory> {
        match self {
            Checkpoint::Softmax(p) => run_episode(env, p, env_rng),
            Checkpoint::Mixture(p) => run_episode(env, p, env_rng),
            Checkpoint::Quantile(a) => a.rollout(env, 0.0, env_rng, explore_rng),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut header = |k: &str, v: String| {
            let _ = writeln!(out, "{k} {v}");
        };
        header("cvarmix-checkpoint", "1".into());
        header("kind", self.kind().into());
        header("num_states", self.num_states().to_string());
        header("num_actions", self.num_actions().to_string());
        let vectors: Vec<(&str, &[f64])> = match self {
            Checkpoint::Softmax(p) => vec![("theta", p.params())],
            Checkpoint::Mixture(p) => {
                header("weight_mode", p.mode().name().into());
                vec![("params", p.params()), ("risk_neutral", p.risk_neutral())]
            }
            Checkpoint::Quantile(a) => {
                match a.variant() {
                    DrlVariant::Markov => header("variant", "markov".into()),
                    DrlVariant::Tracking(g) => {
                        header("variant", "tracking".into());
                        header("grid_lo", g.lo.to_string());
                        header("grid_hi", g.hi.to_string());
                        header("grid_bins", g.bins.to_string());
                    }
                }
                header("quantiles", a.table().num_quantiles().to_string());
                header("alpha", a.alpha().to_string());
                header("gamma", a.gamma().to_string());
                header("lr", a.lr().to_string());
                header("k0", a.k0().to_string());
                vec![("table", a.table().values())]
            }
        };
        for (name, values) in vectors {
            let _ = writeln!(out, "vector {name} {}", values.len());
            for v in values {
                let _ = writeln!(out, "{v}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(MAGIC) {
            return Err(Error::Format(format!("missing header line `{MAGIC}`")));
        }
        let mut header = BTreeMap::new();
        let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        while let Some(line) = lines.next() {
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| Error::Format(format!("malformed line `{line}`")))?;
            if key != "vector" {
                header.insert(key.to_string(), value.to_string());
                continue;
            }
            let (name, len) = value
                .split_once(' ')
                .ok_or_else(|| Error::Format(format!("malformed vector line `{line}`")))?;
            let len: usize = len
                .parse()
                .map_err(|_| Error::Format(format!("bad length in `{line}`")))?;
            let mut values = Vec::with_capacity(len);
            for _ in 0..len {
                let v = lines
                    .next()
                    .ok_or_else(|| Error::Format(format!("vector {name} is truncated")))?;
                values.push(
                    v.parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad value `{v}` in vector {name}")))?,
                );
            }
            vectors.insert(name.to_string(), values);
        }
        let h = Header(&header);
        let ns: usize = h.parse("num_states")?;
        let na: usize = h.parse("num_actions")?;
        let mut take = |name: &str| {
            vectors
                .remove(name)
                .ok_or_else(|| Error::Format(format!("missing vector `{name}`")))
        };
        match h.get("kind")? {
            "softmax" => Ok(Checkpoint::Softmax(SoftmaxPolicy::from_theta(ns, na, take("theta")?)?)),
            "mixture" => {
                let mode = WeightMode::from_name(h.get("weight_mode")?)
                    .ok_or_else(|| Error::Format("unknown weight_mode".into()))?;
                let params = take("params")?;
                let rn = take("risk_neutral")?;
                Ok(Checkpoint::Mixture(MixturePolicy::from_params(ns, na, mode, params, rn)?))
            }
            "quantile" => {
                let variant = match h.get("variant")? {
                    "markov" => DrlVariant::Markov,
                    "tracking" => DrlVariant::Tracking(KGrid::new(
                        h.parse("grid_lo")?,
                        h.parse("grid_hi")?,
                        h.parse("grid_bins")?,
                    )?),
                    other => return Err(Error::Format(format!("unknown variant `{other}`"))),
                };
                let m: usize = h.parse("quantiles")?;
                let mut agent = DrlAgent::new(
                    variant,
                    ns,
                    na,
                    m,
                    h.parse("alpha")?,
                    h.parse("gamma")?,
                    h.parse("lr")?,
                )?;
                let rows = agent.table().num_states();
                let table = QuantileTable::from_values(rows, na, m, take("table")?)?;
                agent = agent.with_table(table)?;
                agent.set_k0(h.parse("k0")?);
                Ok(Checkpoint::Quantile(agent))
            }
            other => Err(Error::Format(format!("unknown checkpoint kind `{other}`"))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

struct Header<'a>(&'a BTreeMap<String, String>);

impl Header<'_> {
    fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("missing header `{key}`")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| Error::Format(format!("bad value `{v}` for header `{key}`")))
    }
}
