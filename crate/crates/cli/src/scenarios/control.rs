//! Scenarios on finite MDPs: exact planning, the learning algorithms and
//! the linear-MDP closure check.

use rand::Rng;
use rlfa_core::algorithms::{
    all_pairs, fitted_q_iteration, fitted_reward as run_fitted_reward, loglog_slope_second_half, lsvi_ucb as run_lsvi,
    policy_gradient as run_policy_gradient, unit_ball_reward, FunctionClass, LsviConfig, PolicyGradientConfig,
    SoftmaxParameterization,
};
use rlfa_core::linear::{build_linear_mdp, check_linear_closure, tabular_embedding, FeatureMap, FeatureProjector, LinearMdpSpec};
use rlfa_core::mdp::{default_labels, evaluate_policy, softmax_gap_bound, solve_exact, FiniteMdp, Policy, QTable};
use rlfa_core::rng::{stream, unit_sphere, Stream};
use rlfa_core::simulator::{EpisodicSimulator, GenerativeModel};
use serde_json::json;

use super::{require, Outcome, ASSERT_TOL};
use crate::artifact::{Assertions, Summary, Table};
use crate::config::{
    ClosureCheckParams, ExactDpParams, FittedRewardParams, FqiParams, LsviParams, PolicyGradientParams, Theorem1Params,
};
use crate::error::Result;

fn outcome(summary: Summary, tables: Vec<Table>) -> Outcome {
    Outcome {
        summary,
        tables,
        assertions: None,
    }
}

/// Rows `step,state,action,<name>...` over the full grid.
fn grid_table(name: &str, mdp: &FiniteMdp, columns: &[&str], cells: impl Fn(usize, usize, usize) -> Vec<f64>) -> Table {
    let mut header = vec!["step", "state", "action"];
    header.extend_from_slice(columns);
    let mut t = Table::new(name, &header);
    for h in 0..mdp.horizon() {
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                let mut row = vec![h.to_string(), s.to_string(), a.to_string()];
                row.extend(cells(h, s, a).into_iter().map(|v| v.to_string()));
                t.push(row);
            }
        }
    }
    t
}

pub(crate) fn exact_dp(p: &ExactDpParams, seed: u64) -> Result<Outcome> {
    let mdp = p.mdp.build(seed)?;
    let sol = solve_exact(&mdp);
    let table = grid_table("qstar", &mdp, &["qstar", "optimal"], |h, s, a| {
        vec![sol.qstar.get(h, s, a), sol.pistar.prob(h, s, a)]
    });
    let summary = Summary::new("jstar", sol.jstar)
        .with("states", mdp.n_states())
        .with("actions", mdp.n_actions())
        .with("horizon", mdp.horizon())
        .with("reward_range", json!(mdp.reward_range()));
    Ok(outcome(summary, vec![table]))
}

pub(crate) fn theorem1(p: &Theorem1Params, seed: u64) -> Result<Outcome> {
    require(p.trials > 0, "trials must be positive")?;
    require(
        p.max_states >= 1 && p.max_actions >= 1 && p.max_horizon >= 1,
        "size maxima must be at least 1",
    )?;
    require(!p.betas.is_empty(), "betas must be nonempty")?;
    require(p.perturbation >= 0.0, "perturbation must be nonnegative")?;
    let mut rng = stream(seed, Stream::Instance);
    let mut table = Table::new(
        "sandwich",
        &["trial", "states", "actions", "horizon", "beta", "lhs", "rhs", "entropy_term", "mismatch_term", "pass"],
    );
    let mut passed = 0;
    let mut min_slack = f64::INFINITY;
    for trial in 0..p.trials {
        let ns = rng.random_range(1..=p.max_states);
        let na = rng.random_range(1..=p.max_actions);
        let horizon = rng.random_range(1..=p.max_horizon);
        let mdp = FiniteMdp::random(&mut rng, ns, na, horizon);
        let beta = p.betas[trial % p.betas.len()];
        let qstar = solve_exact(&mdp).qstar;
        let values = qstar
            .values()
            .iter()
            .map(|v| v + p.perturbation * (rng.random::<f64>() - 0.5))
            .collect();
        let q = QTable::from_values(horizon, ns, na, values)?;
        let bound = softmax_gap_bound(&mdp, &q, beta)?;
        let slack = bound.slack();
        let pass = slack >= -ASSERT_TOL;
        passed += pass as usize;
        min_slack = min_slack.min(slack);
        table.push([
            trial.to_string(),
            ns.to_string(),
            na.to_string(),
            horizon.to_string(),
            beta.to_string(),
            bound.lhs.to_string(),
            bound.rhs.to_string(),
            bound.entropy_term.to_string(),
            bound.mismatch_term.to_string(),
            pass.to_string(),
        ]);
    }
    Ok(Outcome {
        summary: Summary::new("min_slack", min_slack),
        tables: vec![table],
        assertions: Some(Assertions {
            passed,
            total: p.trials,
        }),
    })
}

pub(crate) fn fqi(p: &FqiParams, seed: u64) -> Result<Outcome> {
    require(p.samples_per_pair > 0, "samples_per_pair must be positive")?;
    let mdp = p.mdp.build(seed)?;
    let (ns, na, horizon) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let fc = FunctionClass::Linear {
        features: FeatureMap::tabular_onehot(ns, na),
        lambda: p.lambda,
    };
    let pairs: Vec<Vec<usize>> = all_pairs(horizon, ns * na)
        .into_iter()
        .map(|step| step.iter().copied().cycle().take(step.len() * p.samples_per_pair).collect())
        .collect();
    let mut gm = GenerativeModel::new(&mdp, seed).with_noise(p.noise);
    let report = fitted_q_iteration(&mut gm, &fc, &pairs)?;
    let exact = solve_exact(&mdp);
    let j = evaluate_policy(&mdp, &report.policy)?.j;
    let q_hat = report.q.clone().expect("fitted Q-iteration reports its Q table");
    let table = grid_table("fqi", &mdp, &["q_hat", "qstar"], |h, s, a| {
        vec![q_hat.get(h, s, a), exact.qstar.get(h, s, a)]
    });
    let summary = Summary::new("gap", exact.jstar - j)
        .with("jstar", exact.jstar)
        .with("j", j)
        .with("queries", report.queries)
        .with("max_q_error", q_hat.max_abs_diff(&exact.qstar));
    Ok(outcome(summary, vec![table]))
}

pub(crate) fn lsvi_ucb(p: &LsviParams, seed: u64) -> Result<Outcome> {
    require(p.episodes > 0, "episodes must be positive")?;
    let mdp = p.mdp.build(seed)?;
    let emb = tabular_embedding(&mdp);
    let d = emb.features.dim();
    let lambda = p.lambda.unwrap_or(1.0 / p.episodes as f64);
    let mut cfg = LsviConfig::new(p.episodes);
    cfg.lambda = lambda;
    cfg.beta_scale = p.beta_scale.unwrap_or(1.0 / (d * mdp.horizon()) as f64);
    cfg.beta = p.beta;
    cfg.regularizer = p.regularizer;
    let fc = FunctionClass::Linear {
        features: emb.features,
        lambda,
    };
    let mut sim = EpisodicSimulator::new(&mdp, seed);
    let report = run_lsvi(&mut sim, &fc, &cfg, Some(&mdp))?;
    let mut bytes = Vec::new();
    report.write_regret_csv(&mut bytes)?;
    let regret = Table::from_csv("regret", &bytes)?;
    let ledger = report.regret.as_ref().expect("evaluator supplied");
    let slope = loglog_slope_second_half(&ledger.curve());
    let summary = Summary::new("cumulative_regret", ledger.cumulative())
        .with("jstar", ledger.jstar())
        .with("loglog_slope_second_half", json!(slope))
        .with("lambda", lambda)
        .with("beta", cfg.resolved_beta(d, mdp.horizon()))
        .with("regularizer", json!(cfg.regularizer));
    Ok(outcome(summary, vec![regret]))
}

pub(crate) fn policy_gradient(p: &PolicyGradientParams, seed: u64) -> Result<Outcome> {
    let mdp = p.mdp.build(seed)?;
    let param = SoftmaxParameterization::tabular(mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let theta0 = vec![0.0; param.dim()];
    let cfg = PolicyGradientConfig {
        iterations: p.iterations,
        rollouts: p.rollouts,
        eta: p.eta,
    };
    let mut sim = EpisodicSimulator::new(&mdp, seed);
    let run = run_policy_gradient(&mut sim, &param, &theta0, &cfg, &mut stream(seed, Stream::Actions), Some(&mdp))?;
    let mut bytes = Vec::new();
    run.report.write_learning_csv(&mut bytes)?;
    let learning = Table::from_csv("learning", &bytes)?;
    let jstar = solve_exact(&mdp).jstar;
    let last = *run.report.learning_curve.last().expect("initial value recorded");
    let summary = Summary::new("final_gap", jstar - last)
        .with("jstar", jstar)
        .with("initial_j", run.report.learning_curve[0])
        .with("final_j", last);
    Ok(outcome(summary, vec![learning]))
}

pub(crate) fn fitted_reward(p: &FittedRewardParams, seed: u64) -> Result<Outcome> {
    require(p.states > 0 && p.actions > 0 && p.horizon > 0, "sizes must be positive")?;
    require(p.n > 0, "n must be positive")?;
    let kernel = p.kernel.build(&mut stream(seed, Stream::Custom(0)))?;
    let mut rng = stream(p.instance_seed.unwrap_or(seed), Stream::Instance);
    let base = FiniteMdp::random(&mut rng, p.states, p.actions, p.horizon);
    let n_pairs = p.states * p.actions;
    let embedding: Vec<Vec<f64>> = (0..n_pairs).map(|_| unit_sphere(&mut rng, kernel.dim())).collect();
    let reward = unit_ball_reward(&mut rng, &kernel, &embedding, p.horizon, p.atoms)?;
    let mdp = base.with_rewards(reward, (0.0, 1.0))?;
    let nu = vec![vec![1.0 / n_pairs as f64; n_pairs]; p.horizon];
    let mut gm = GenerativeModel::new(&mdp, seed).with_noise(p.noise);
    let run = run_fitted_reward(&mut gm, &kernel, &embedding, &nu, p.n, p.sampling, &mut stream(seed, Stream::Algorithm))?;
    let jstar = solve_exact(&mdp).jstar;
    let j = evaluate_policy(&mdp, &run.report.policy)?.j;
    let truth = mdp.reward_tensor();
    let table = grid_table("reward", &mdp, &["reward", "reward_hat"], |h, s, a| {
        let i = (h * p.states + s) * p.actions + a;
        vec![truth[i], run.reward_hat[i]]
    });
    let max_err = truth
        .iter()
        .zip(&run.reward_hat)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let summary = Summary::new("gap", jstar - j)
        .with("jstar", jstar)
        .with("j", j)
        .with("max_reward_error", max_err)
        .with("queries", run.report.queries);
    Ok(outcome(summary, vec![table]))
}

pub(crate) fn closure_check(p: &ClosureCheckParams, seed: u64) -> Result<Outcome> {
    require(p.states > 0 && p.actions > 0 && p.d > 0 && p.horizon > 0, "sizes must be positive")?;
    let mut rng = stream(seed, Stream::Instance);
    let spec = LinearMdpSpec::random(&mut rng, p.states, p.actions, p.d, p.horizon);
    let mdp = build_linear_mdp(&spec, default_labels("s", p.states), default_labels("a", p.actions))?;
    let mut checks = stream(seed, Stream::Algorithm);
    let report = check_linear_closure(&mdp, &spec.features, p.trials, &mut checks)?;
    let proj = FeatureProjector::new(&spec.features);
    let mut q_residual = 0.0f64;
    for _ in 0..p.policies {
        let pi = Policy::random(&mut checks, p.horizon, p.states, p.actions);
        let eval = evaluate_policy(&mdp, &pi)?;
        for h in 0..p.horizon {
            q_residual = q_residual.max(proj.fit(eval.q.step(h)).1);
        }
    }
    let mut table = Table::new("closure", &["check", "count", "max_residual", "tolerance", "pass"]);
    let rows = [
        ("bellman_image", p.trials, report.max_residual),
        ("policy_q", p.policies, q_residual),
    ];
    let mut passed = 0;
    for (name, count, res) in rows {
        let pass = res <= p.tolerance;
        passed += pass as usize;
        table.push([
            name.to_string(),
            count.to_string(),
            res.to_string(),
            p.tolerance.to_string(),
            pass.to_string(),
        ]);
    }
    Ok(Outcome {
        summary: Summary::new("max_residual", report.max_residual.max(q_residual))
            .with("closure_constant", report.constant),
        tables: vec![table],
        assertions: Some(Assertions { passed, total: 2 }),
    })
}
