use cvarmix_core::env::{EnvKind, Environment, Maze, RiskyBandit, ACTION_RISKY, ACTION_SAFE};
use cvarmix_core::learners::{
    cvar_pg_update, initial_mixture, mix_train, precomputed_risk_neutral, AlphaSchedule,
    CvarPgTrainer, DrlAgent, DrlSchedule, DrlTrainer, DrlVariant, IqlSettings, KGrid, MixConfig,
    ReinforceTrainer, Trainer, DEFAULT_QUANTILES,
};
use cvarmix_core::policy::{softmax, MixturePolicy, Policy, ScorePolicy, SoftmaxPolicy, WeightMode};
use cvarmix_core::risk::tail_flatness;
use cvarmix_core::rng::{stream_rng, Stream};
use cvarmix_core::env::run_episode;

fn bandit() -> EnvKind {
    EnvKind::Bandit(RiskyBandit::new())
}

fn maze() -> EnvKind {
    EnvKind::Maze(Maze::canonical())
}

fn p_safe(policy: &impl Policy) -> f64 {
    policy.action_probs(RiskyBandit::DECISION).probs()[ACTION_SAFE]
}

#[test]
fn bandit_cvar_pg_prefers_safe_arm() {
    let pi = SoftmaxPolicy::zeros(2, 2);
    let mut t = CvarPgTrainer::new(bandit(), pi, AlphaSchedule::constant(0.1), 100, 0.1, 1).unwrap();
    for b in 0..300 {
        t.train_batch(b).unwrap();
    }
    let p = p_safe(t.policy());
    assert!(p > 0.9, "P(safe) = {p}");
}

#[test]
fn bandit_reinforce_prefers_risky_arm() {
    let pi = SoftmaxPolicy::zeros(2, 2);
    let mut t = ReinforceTrainer::new(bandit(), pi, 100, 0.1, 1.0, 2).unwrap();
    for b in 0..300 {
        t.train_batch(b).unwrap();
    }
    let p = 1.0 - p_safe(t.policy());
    assert!(p > 0.9, "P(risky) = {p}");
}

fn bandit_drl(variant: DrlVariant, k0: f64) -> DrlAgent {
    let env = bandit();
    let mut agent = DrlAgent::new(variant, env.num_states(), env.num_actions(), DEFAULT_QUANTILES, 0.1, 1.0, 0.2).unwrap();
    agent.set_k0(k0);
    let batches = 400;
    let mut t = DrlTrainer::new(env, agent, AlphaSchedule::constant(0.1), DrlSchedule::standard(batches * 50), 50, 3).unwrap();
    for b in 0..batches {
        t.train_batch(b).unwrap();
    }
    t.agent().clone()
}

#[test]
fn bandit_drl_markov_prefers_safe_arm() {
    let agent = bandit_drl(DrlVariant::Markov, 0.0);
    let z = agent.table();
    let cvar = |a| cvarmix_core::learners::quantile_cvar(z.get(RiskyBandit::DECISION, a), 0.1);
    assert!(cvar(ACTION_SAFE) > cvar(ACTION_RISKY), "{} vs {}", cvar(ACTION_SAFE), cvar(ACTION_RISKY));
    let mut rng = stream_rng(0, Stream::Exploration);
    assert_eq!(agent.act(RiskyBandit::DECISION, 0.0, 0.0, &mut rng), ACTION_SAFE);
}

#[test]
fn bandit_drl_tracking_prefers_safe_arm() {
    let agent = bandit_drl(DrlVariant::Tracking(KGrid::default()), 1.0);
    let mut rng = stream_rng(0, Stream::Exploration);
    assert_eq!(agent.act(RiskyBandit::DECISION, agent.k0(), 0.0, &mut rng), ACTION_SAFE);
}

#[test]
fn maze_cvar_pg_mostly_sees_flat_tails() {
    let env = maze();
    let pi = SoftmaxPolicy::zeros(env.num_states(), env.num_actions());
    let mut t = CvarPgTrainer::new(env, pi, AlphaSchedule::constant(0.1), 50, 1e-2, 0).unwrap();
    let mut zero = 0;
    for b in 0..30 {
        let r = t.train_batch(b).unwrap();
        let returns: Vec<f64> = r.trajectories.iter().map(|t| t.total_return).collect();
        assert_eq!(r.grad_norm == 0.0, tail_flatness(&returns, 0.1).unwrap());
        zero += (r.grad_norm == 0.0) as usize;
    }
    assert!(zero >= 15, "{zero} zero-gradient batches out of 30");
}

#[test]
fn mix_without_batches_is_identity() {
    let env = maze();
    let rn = precomputed_risk_neutral(&env, 0.05).unwrap();
    let init = initial_mixture(&env, WeightMode::PerAction, rn).unwrap();
    let config = MixConfig { schedule: AlphaSchedule::constant(0.1), episodes: 50, lr: 1e-2, iql: None };
    let (out, reports) = mix_train(&env, init.clone(), &config, 0, 0).unwrap();
    assert!(reports.is_empty());
    assert_eq!(out, init);
}

#[test]
fn mix_with_saturated_weights_tracks_cvar_pg() {
    let env = maze();
    let (ns, na) = (env.num_states(), env.num_actions());
    // The adjustable component is uniform at theta1 = 0; freeze pi_n to that softmax.
    let rn: Vec<f64> = (0..ns).flat_map(|_| softmax(&vec![0.0; na])).collect();
    let mut params = vec![0.0; 2 * ns * na];
    params[ns * na..].iter_mut().for_each(|p| *p = 30.0);
    let mix = MixturePolicy::from_params(ns, na, WeightMode::PerAction, params, rn).unwrap();
    let config = MixConfig { schedule: AlphaSchedule::constant(0.1), episodes: 50, lr: 0.5, iql: None };

    let mut soft = SoftmaxPolicy::zeros(ns, na);
    let mut mix_trainer = cvarmix_core::learners::MixTrainer::new(env.clone(), mix, config, 5).unwrap();
    let mut rng = stream_rng(5, Stream::Rollout);
    let mut max_diff: f64 = 0.0;
    for b in 0..20 {
        let batch: Vec<_> = (0..50).map(|_| run_episode(&env, &soft, &mut rng).unwrap()).collect();
        cvar_pg_update(&batch, &mut soft, 0.1, 0.5).unwrap();
        let r = mix_trainer.train_batch(b).unwrap();
        assert_eq!(
            batch.iter().map(|t| t.total_return).collect::<Vec<_>>(),
            r.trajectories.iter().map(|t| t.total_return).collect::<Vec<_>>()
        );
        let theta1 = mix_trainer.policy().theta1();
        for (a, b) in soft.params().iter().zip(theta1) {
            max_diff = max_diff.max((a - b).abs());
        }
        assert!(max_diff < 1e-9, "batch {b}: theta1 deviates by {max_diff}");
    }
    assert!(soft.params().iter().any(|p| *p != 0.0), "no learning happened");
}

#[test]
fn maze_iql_risk_neutral_reaches_goal() {
    let env = maze();
    let init = initial_mixture(&env, WeightMode::PerAction, vec![0.25; env.num_states() * env.num_actions()]).unwrap();
    let config = MixConfig {
        schedule: AlphaSchedule::constant(0.1),
        episodes: 50,
        lr: 1e-2,
        iql: Some(IqlSettings::default()),
    };
    let mut t = cvarmix_core::learners::MixTrainer::new(env.clone(), init, config, 8).unwrap();
    for b in 0..60 {
        t.train_batch(b).unwrap();
    }
    let iql = t.iql_tables().unwrap();
    let greedy: Vec<usize> = (0..env.num_states()).map(|s| iql.greedy_action(s)).collect();
    let policy = cvarmix_core::policy::TablePolicy::deterministic(env.num_actions(), &greedy);
    let mut rng = stream_rng(8, Stream::Evaluation);
    let goal = (0..100)
        .filter(|_| env.flags(&run_episode(&env, &policy, &mut rng).unwrap()).reached_goal)
        .count();
    assert!(goal >= 80, "greedy IQL policy reached the goal in {goal}/100 rollouts");
}
