//! Acceptance run: one PASS/FAIL line per criterion, then a summary.
//! Exits 1 when any criterion fails.

use cvarmix_bench::{
    aggregate, build_trainer, checkpoint_path, parse_config, rollout_curve, run_experiment, ExperimentConfig, MetricsRow,
};
use cvarmix_core::checkpoint::Checkpoint;
use cvarmix_core::env::{classify_path, EnvKind, Environment, Maze, PathClass, RiskyBandit, ACTION_RISKY, ACTION_SAFE};
use cvarmix_core::learners::{
    cvar_pg_update, initial_mixture, precomputed_risk_neutral, DrlAgent, DrlVariant, IqlTables, KGrid, DEFAULT_QUANTILES,
};
use cvarmix_core::oracles::suite::{max_gradient_error, monte_carlo_agreement, random_mixture, run_suite};
use cvarmix_core::oracles::{enumerate_returns, exact_cvar, FiniteReturnDistribution, NoiseGrid};
use cvarmix_core::policy::{Policy, SoftmaxPolicy, TablePolicy, WeightMode};
use cvarmix_core::risk::{cvar_dual, empirical_cvar, tail_flatness};
use cvarmix_core::rng::{stream_rng, Stream};
use cvarmix_core::env::{run_episode, Transition};
use rand::Rng;
use std::path::{Path, PathBuf};
use std::process::Command;

type Check = Result<(bool, String), Box<dyn std::error::Error>>;

fn config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn read_rows(path: &Path) -> Result<Vec<MetricsRow>, Box<dyn std::error::Error>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

fn train(cfg: &ExperimentConfig) -> Result<(tempfile::TempDir, Vec<PathBuf>), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let paths = run_experiment(cfg, dir.path())?;
    Ok((dir, paths))
}

fn maze_env() -> EnvKind {
    EnvKind::Maze(Maze::canonical())
}

fn c1_mix_reproduction() -> Check {
    let cfg = config("maze_mix_precomputed.json");
    let (_dir, paths) = train(&cfg)?;
    let summary = aggregate(&paths)?;
    let rates = summary.means("risk_averse_rate").expect("column");
    let (best_batch, best) = rates
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &r)| if r > acc.1 { (i + 1, r) } else { acc });
    let mut long = cfg.clone();
    long.batches = 400;
    let (_dir2, long_paths) = train(&long)?;
    let long_rates = aggregate(&long_paths)?.means("risk_averse_rate").expect("column");
    let at_400 = long_rates[long_rates.len() - 1];
    Ok((
        best >= 0.8,
        format!(
            "best 10-seed mean long-route rate within {} batches = {best:.3} (batch {best_batch}), final = {:.3}, need >= 0.8; \
             same run extended to 400 batches ends at {at_400:.3}",
            cfg.batches,
            rates[rates.len() - 1]
        ),
    ))
}

fn c2_cvar_pg_failure() -> Check {
    let cfg = config("maze_cvar_pg.json");
    let (_dir, paths) = train(&cfg)?;
    let rates = aggregate(&paths)?.means("risk_averse_rate").expect("column");
    let last = rates[rates.len() - 1];
    let (mut zero, mut total) = (0usize, 0usize);
    for p in &paths {
        for row in read_rows(p)? {
            total += 1;
            zero += (row.grad_norm == 0.0) as usize;
        }
    }
    let frac = zero as f64 / total as f64;
    Ok((
        last <= 0.1 && frac >= 0.5,
        format!("final long-route rate {last:.3} (need <= 0.1), zero-gradient batches {zero}/{total} = {frac:.3} (need >= 0.5)"),
    ))
}

fn c3_reinforce_contrast() -> Check {
    let cfg = config("maze_reinforce.json");
    let env = cfg.build_env()?;
    let EnvKind::Maze(maze) = &env else { unreachable!("maze config") };
    let (mut red_short, mut total) = (0usize, 0usize);
    for &seed in &cfg.seeds {
        let mut trainer = build_trainer(&cfg, &env, seed)?;
        let mut last = None;
        for b in 0..cfg.batches {
            last = Some(trainer.train_batch(b)?);
        }
        for t in &last.expect("batches > 0").trajectories {
            total += 1;
            red_short += (classify_path(t, maze.spec()) == PathClass::RedShort) as usize;
        }
    }
    let rate = red_short as f64 / total as f64;
    let oracle = run_suite("maze")?;
    let oracle_ok = oracle.iter().all(|c| c.passed);
    Ok((
        rate >= 0.8 && oracle_ok,
        format!(
            "final-batch red-route rate {rate:.3} over {} seeds (need >= 0.8); maze oracle checks {}",
            cfg.seeds.len(),
            if oracle_ok { "agree" } else { "FAILED" }
        ),
    ))
}

fn risky_arm() -> Result<FiniteReturnDistribution, Box<dyn std::error::Error>> {
    let bandit = RiskyBandit::new();
    let policy = TablePolicy::deterministic(2, &[ACTION_RISKY, ACTION_RISKY]);
    Ok(enumerate_returns(&bandit.model()?, &policy, &NoiseGrid::new(1), 1, 16)?)
}

fn c4_estimators() -> Check {
    let dist = risky_arm()?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, want) in [(0.1, -10.0), (0.2, -3.5), (1.0, 1.7)] {
        let m = monte_carlo_agreement(&dist, alpha, 100_000, 200, 4)?;
        let exact_ok = (m.exact - want).abs() < 1e-12;
        ok &= exact_ok && m.within_three_se();
        parts.push(format!(
            "a={alpha}: est {:.4} exact {:.4} |d|={:.4} 3se={:.4}",
            m.estimate,
            m.exact,
            (m.estimate - m.exact).abs(),
            3.0 * m.standard_error
        ));
    }
    let mut rng = stream_rng(5, Stream::Evaluation);
    let sample: Vec<f64> = (0..100_000).map(|_| dist.sample(&mut rng)).collect();
    let grid = [-10.0, 3.0];
    let mut worst: f64 = 0.0;
    for alpha in [0.1, 0.2, 0.5, 1.0] {
        let (_, dual) = cvar_dual(&sample, alpha, &grid)?;
        worst = worst.max((dual - empirical_cvar(&sample, alpha)?).abs());
    }
    ok &= worst <= 1e-9;
    parts.push(format!("dual gap {worst:.1e}"));
    Ok((ok, parts.join("; ")))
}

fn c5_gradients() -> Check {
    let (ns, na) = (5, 4);
    let soft = max_gradient_error(100, 21, ns, |rng| {
        let theta = (0..ns * na).map(|_| rng.random_range(-3.0..3.0)).collect();
        SoftmaxPolicy::from_theta(ns, na, theta).expect("sized")
    })?;
    let per_action = max_gradient_error(100, 22, ns, |rng| random_mixture(rng, ns, na, WeightMode::PerAction))?;
    let per_state = max_gradient_error(100, 23, ns, |rng| random_mixture(rng, ns, na, WeightMode::PerState))?;
    let worst = soft.max(per_action).max(per_state);
    Ok((
        worst < 1e-6,
        format!("max relative error: softmax {soft:.1e}, mixture per-action {per_action:.1e}, per-state {per_state:.1e}"),
    ))
}

fn c6_flat_tail_equivalence() -> Check {
    let mut rng = stream_rng(6, Stream::PolicyInit);
    let mut rollout = stream_rng(6, Stream::Rollout);
    let (mut flat, mut discrepancies) = (0usize, 0usize);
    let total = 1000;
    for i in 0..total {
        let env = if i % 2 == 0 { maze_env() } else { EnvKind::Bandit(RiskyBandit::new()) };
        let (ns, na) = (env.num_states(), env.num_actions());
        let scale = [0.0, 0.5, 3.0][i % 3];
        let theta = (0..ns * na).map(|_| rng.random_range(-scale..=scale)).collect();
        let mut policy = SoftmaxPolicy::from_theta(ns, na, theta)?;
        let n = rng.random_range(10..=60);
        let batch = (0..n).map(|_| run_episode(&env, &policy, &mut rollout)).collect::<Result<Vec<_>, _>>()?;
        let returns: Vec<f64> = batch.iter().map(|t| t.total_return).collect();
        let is_flat = tail_flatness(&returns, 0.1)?;
        let norm = cvar_pg_update(&batch, &mut policy, 0.1, 0.01)?;
        flat += is_flat as usize;
        discrepancies += ((norm == 0.0) != is_flat) as usize;
    }
    Ok((
        discrepancies == 0,
        format!("{total} batches ({flat} flat, {} not), {discrepancies} discrepancies", total - flat),
    ))
}

fn quantile_run(variant: DrlVariant, steps: usize) -> Result<(usize, usize), Box<dyn std::error::Error>> {
    let env = maze_env();
    let mut agent = DrlAgent::new(variant, env.num_states(), env.num_actions(), DEFAULT_QUANTILES, 0.1, env.discount(), 0.1)?;
    let mut env_rng = stream_rng(7, Stream::Rollout);
    let mut explore = stream_rng(7, Stream::Exploration);
    let (mut updates, mut violations) = (0usize, 0usize);
    while updates < steps {
        let eps = 1.0 - 0.9 * (updates as f64 / steps as f64);
        agent.run_episode(&env, eps, &mut env_rng, &mut explore, |table, row| {
            updates += 1;
            violations += !table.is_sorted_row(row) as usize;
        })?;
    }
    let table = agent.table();
    violations += (0..table.num_rows()).filter(|&i| !table.is_sorted_row(i)).count();
    Ok((updates, violations))
}

fn c7_quantile_monotonicity() -> Check {
    let (mkv_updates, mkv_bad) = quantile_run(DrlVariant::Markov, 100_000)?;
    let (lim_updates, lim_bad) = quantile_run(DrlVariant::Tracking(KGrid::default()), 100_000)?;
    Ok((
        mkv_bad == 0 && lim_bad == 0,
        format!("markov: {mkv_updates} updates, {mkv_bad} violations; tracking: {lim_updates} updates, {lim_bad} violations"),
    ))
}

fn fit_v(eta: f64, targets: &[f64]) -> Result<f64, Box<dyn std::error::Error>> {
    let mut iql = IqlTables::new(1, targets.len(), eta, 1.0)?;
    let mut batch = Vec::new();
    for (a, &q) in targets.iter().enumerate() {
        iql.set_target_q(0, a, q);
        batch.push(Transition { state: 0, action: a, reward: 0.0, next_state: 0, done: true, truncated: false });
    }
    for _ in 0..20_000 {
        iql.update_v(&batch, 0.1)?;
    }
    Ok(iql.v()[0])
}

fn c8_expectiles() -> Check {
    let mut rng = stream_rng(8, Stream::PolicyInit);
    let data: Vec<f64> = (0..12).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    let v_half = fit_v(0.5, &data)?;
    let v_09 = fit_v(0.9, &[0.0, 2.0])?;
    let ladder = [0.5, 0.7, 0.8, 0.9].iter().map(|&e| fit_v(e, &data)).collect::<Result<Vec<_>, _>>()?;
    let monotone = ladder.windows(2).all(|w| w[0] <= w[1]);
    let ok = (v_half - mean).abs() < 1e-3 && (v_09 - 1.8).abs() < 1e-3 && monotone;
    Ok((
        ok,
        format!(
            "eta=0.5: V {v_half:.6} vs mean {mean:.6}; eta=0.9 on {{0,2}}: V {v_09:.6}; V over eta 0.5/0.7/0.8/0.9 = {}",
            ladder.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join("/")
        ),
    ))
}

fn load_checkpoints(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<Checkpoint>, Box<dyn std::error::Error>> {
    Ok(cfg.seeds.iter().map(|&s| Checkpoint::load(&checkpoint_path(dir, s))).collect::<Result<_, _>>()?)
}

fn c9_bandit_separation() -> Check {
    let safe = FiniteReturnDistribution::new(vec![(RiskyBandit::new().safe_reward, 1.0)])?;
    let risky = risky_arm()?;
    let mean_best = if risky.mean() > safe.mean() { ACTION_RISKY } else { ACTION_SAFE };
    let cvar_best = if exact_cvar(&risky, 0.1)? > exact_cvar(&safe, 0.1)? { ACTION_RISKY } else { ACTION_SAFE };
    let mut ok = mean_best == ACTION_RISKY && cvar_best == ACTION_SAFE;
    let mut parts = vec![format!("oracle: mean-optimal arm {mean_best}, CVaR-optimal arm {cvar_best}")];
    for (name, want) in [("reinforce", mean_best), ("cvar_pg", cvar_best)] {
        let cfg = config(&format!("bandit_{name}.json"));
        let (dir, _) = train(&cfg)?;
        let worst = load_checkpoints(&cfg, dir.path())?
            .iter()
            .map(|c| match c {
                Checkpoint::Softmax(p) => p.action_probs(RiskyBandit::DECISION).probs()[want],
                _ => f64::NAN,
            })
            .fold(f64::INFINITY, f64::min);
        ok &= worst > 0.9;
        parts.push(format!("{name}: min over seeds P(arm {want}) = {worst:.3}"));
    }
    let cfg = config("bandit_drl_mkv.json");
    let (dir, _) = train(&cfg)?;
    let mut explore = stream_rng(9, Stream::Exploration);
    let mut greedy_ok = 0;
    for c in load_checkpoints(&cfg, dir.path())? {
        if let Checkpoint::Quantile(agent) = c {
            greedy_ok += (agent.act(RiskyBandit::DECISION, agent.k0(), 0.0, &mut explore) == cvar_best) as usize;
        }
    }
    ok &= greedy_ok == cfg.seeds.len();
    parts.push(format!("drl_mkv: greedy arm {cvar_best} in {greedy_ok}/{} seeds", cfg.seeds.len()));
    Ok((ok, parts.join("; ")))
}

fn c10_tail_lift() -> Check {
    let env = maze_env();
    let (ns, na) = (env.num_states(), env.num_actions());
    let random = Checkpoint::Softmax(SoftmaxPolicy::zeros(ns, na));
    let mix = Checkpoint::Mixture(initial_mixture(&env, WeightMode::PerAction, precomputed_risk_neutral(&env, 0.05)?)?);
    let random_curve = rollout_curve(&env, &random, 2000, 10)?;
    let mix_curve = rollout_curve(&env, &mix, 2000, 10)?;
    let (q_random, q_mix) = (random_curve.value_at(0.1)?, mix_curve.value_at(0.1)?);
    let values = |c: &cvarmix_core::risk::QuantileCurve| c.points.iter().map(|p| p.1).collect::<Vec<_>>();
    let flat_random = tail_flatness(&values(&random_curve), 0.1)?;
    let flat_mix = tail_flatness(&values(&mix_curve), 0.1)?;
    let lift = q_mix - q_random;
    Ok((
        lift >= 5.0 && flat_random && !flat_mix,
        format!(
            "0.1-quantile: mixture {q_mix:.3}, random {q_random:.3}, lift {lift:.3} (need >= 5); \
             flat tail: random {flat_random} (need true), mixture {flat_mix} (need false)"
        ),
    ))
}

fn c11_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_cvarmix");
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for algo in ["reinforce", "cvar_pg", "mix_precomputed", "mix_iql", "drl_mkv", "drl_lim"] {
        let work = tempfile::tempdir()?;
        let cfg_path = work.path().join("config.json");
        std::fs::write(
            &cfg_path,
            format!(r#"{{"env": "maze", "algorithm": "{algo}", "batches": 12, "iql_frequency": 3, "iql_sample_size": 2000}}"#),
        )?;
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let out = work.path().join(run);
            let status = Command::new(bin)
                .args(["train", "--config"])
                .arg(&cfg_path)
                .args(["--seeds", "0,1,2", "--out"])
                .arg(&out)
                .output()?;
            if !status.status.success() {
                return Ok((false, format!("{algo}: train exited with {}", status.status)));
            }
            outputs.push(out);
        }
        for seed in 0..3 {
            for file in [format!("seed_{seed}.csv"), format!("seed_{seed}.ckpt")] {
                compared += 1;
                if std::fs::read(outputs[0].join(&file))? != std::fs::read(outputs[1].join(&file))? {
                    mismatched.push(format!("{algo}/{file}"));
                }
            }
        }
    }
    Ok((
        mismatched.is_empty(),
        format!("{compared} file pairs from repeated `train` runs, mismatches: {mismatched:?}"),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("Maze MIX reaches the long route", c1_mix_reproduction),
        ("CVaR-PG stalls on flat tails", c2_cvar_pg_failure),
        ("REINFORCE takes the red route", c3_reinforce_contrast),
        ("CVaR estimators", c4_estimators),
        ("Score-function gradients", c5_gradients),
        ("Zero gradient iff flat tail", c6_flat_tail_equivalence),
        ("Quantile rows stay sorted", c7_quantile_monotonicity),
        ("Expectile regression", c8_expectiles),
        ("Bandit algorithm separation", c9_bandit_separation),
        ("Mixture lifts the left tail", c10_tail_lift),
        ("Byte-identical reruns", c11_determinism),
    ];
    let mut passed = 0;
    for (i, (title, run)) in criteria.iter().enumerate() {
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        passed += ok as usize;
        println!("Criterion {:>2} {title}: {} | {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("{passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
