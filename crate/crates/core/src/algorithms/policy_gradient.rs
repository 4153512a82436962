use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::mdp::{evaluate_policy, occupancy, softmax_row, FiniteMdp, Policy, PolicyKind};
use crate::simulator::EpisodicSimulator;

use super::report::AlgorithmReport;

/// Parameter norm beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Softmax policy `pi_theta(a | h, s) ∝ exp(theta^T x(h, s, a))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxParameterization {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    dim: usize,
    /// `[h][s][a][k]`
    features: Vec<f64>,
}

impl SoftmaxParameterization {
    /// One logit per `(h, s, a)`.
    pub fn tabular(horizon: usize, n_states: usize, n_actions: usize) -> Self {
        let dim = horizon * n_states * n_actions;
        let mut features = vec![0.0; dim * dim];
        for i in 0..dim {
            features[i * dim + i] = 1.0;
        }
        SoftmaxParameterization {
            horizon,
            n_states,
            n_actions,
            dim,
            features,
        }
    }

    pub fn from_features(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        dim: usize,
        features: Vec<f64>,
    ) -> Result<Self> {
        if features.len() != horizon * n_states * n_actions * dim {
            return Err(Error::DimensionMismatch {
                expected: horizon * n_states * n_actions * dim,
                got: features.len(),
                context: "policy features",
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("policy features must be finite"));
        }
        Ok(SoftmaxParameterization {
            horizon,
            n_states,
            n_actions,
            dim,
            features,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn x(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let start = ((h * self.n_states + s) * self.n_actions + a) * self.dim;
        &self.features[start..start + self.dim]
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: theta.len(),
                context: "policy parameters",
            });
        }
        Ok(())
    }

    pub fn probs(&self, theta: &[f64], h: usize, s: usize) -> Vec<f64> {
        let logits: Vec<f64> = (0..self.n_actions)
            .map(|a| self.x(h, s, a).iter().zip(theta).map(|(x, t)| x * t).sum())
            .collect();
        softmax_row(&logits, 1.0)
    }

    pub fn policy(&self, theta: &[f64]) -> Result<Policy> {
        self.check_theta(theta)?;
        let mut table = Vec::with_capacity(self.horizon * self.n_states * self.n_actions);
        for h in 0..self.horizon {
            for s in 0..self.n_states {
                table.extend(self.probs(theta, h, s));
            }
        }
        Policy::with_kind(self.horizon, self.n_states, self.n_actions, table, PolicyKind::ParameterizedSoftmax)
    }

    /// `grad_theta log pi_theta(a | h, s) = x(h,s,a) - sum_b pi(b) x(h,s,b)`.
    pub fn score(&self, theta: &[f64], h: usize, s: usize, a: usize) -> Vec<f64> {
        let probs = self.probs(theta, h, s);
        let mut g = self.x(h, s, a).to_vec();
        for (b, p) in probs.iter().enumerate() {
            for (gk, xk) in g.iter_mut().zip(self.x(h, s, b)) {
                *gk -= p * xk;
            }
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub mean: Vec<f64>,
    /// Per-coordinate standard error of `mean`.
    pub std_err: Vec<f64>,
    pub rollouts: usize,
}

/// REINFORCE estimate with reward-to-go weights from `n` rollouts:
/// `(1/n) sum_i sum_h grad log pi(A_h^i | S_h^i) sum_{h' >= h} r_{h'}^i`.
pub fn estimate_gradient<R: Rng + ?Sized>(
    sim: &mut EpisodicSimulator<&FiniteMdp>,
    param: &SoftmaxParameterization,
    theta: &[f64],
    n: usize,
    action_rng: &mut R,
) -> Result<GradientEstimate> {
    param.check_theta(theta)?;
    if n == 0 {
        return Err(Error::invalid("gradient estimate needs at least one rollout"));
    }
    let pi = param.policy(theta)?;
    let dim = param.dim();
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for _ in 0..n {
        let traj = sim.rollout(&pi, action_rng)?;
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut to_go: f64 = traj.total_reward();
        for t in &traj.steps {
            let score = param.score(theta, t.h, t.s, t.a);
            for (gk, sk) in g.iter_mut().zip(score) {
                *gk += sk * to_go;
            }
            to_go -= t.r;
        }
        for k in 0..dim {
            sum[k] += g[k];
            sum_sq[k] += g[k] * g[k];
        }
    }
    let nf = n as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| {
            let var = if n > 1 { (sq - nf * m * m).max(0.0) / (nf - 1.0) } else { 0.0 };
            (var / nf).sqrt()
        })
        .collect();
    Ok(GradientEstimate {
        mean,
        std_err,
        rollouts: n,
    })
}

/// `grad J = sum_h E_{rho_h}[Q_h^pi(s, a) grad log pi(a | h, s)]`, computed
/// exactly from occupancies and policy evaluation.
pub fn exact_policy_gradient(mdp: &FiniteMdp, param: &SoftmaxParameterization, theta: &[f64]) -> Result<Vec<f64>> {
    let pi = param.policy(theta)?;
    let q = evaluate_policy(mdp, &pi)?.q;
    let rho = occupancy(mdp, &pi)?;
    let mut g = vec![0.0; param.dim()];
    for (h, occ) in rho.iter().enumerate() {
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                let w = occ.get(s, a) * q.get(h, s, a);
                if w == 0.0 {
                    continue;
                }
                for (gk, sk) in g.iter_mut().zip(param.score(theta, h, s, a)) {
                    *gk += w * sk;
                }
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyGradientConfig {
    pub iterations: usize,
    pub rollouts: usize,
    pub eta: f64,
}

#[derive(Debug, Clone)]
pub struct PolicyGradientRun {
    pub report: AlgorithmReport,
    pub theta: Vec<f64>,
}

/// Plain stochastic gradient ascent `theta <- theta + eta g_k`.
pub fn policy_gradient<R: Rng + ?Sized>(
    sim: &mut EpisodicSimulator<&FiniteMdp>,
    param: &SoftmaxParameterization,
    theta0: &[f64],
    cfg: &PolicyGradientConfig,
    action_rng: &mut R,
    evaluator: Option<&FiniteMdp>,
) -> Result<PolicyGradientRun> {
    param.check_theta(theta0)?;
    if !(cfg.eta.is_finite() && cfg.eta > 0.0) {
        return Err(Error::invalid("step size eta must be positive"));
    }
    let mut theta = theta0.to_vec();
    let mut report = AlgorithmReport::new(
        "policy-gradient",
        sim.seed(),
        json!({"iterations": cfg.iterations, "rollouts": cfg.rollouts, "eta": cfg.eta}),
        param.policy(&theta)?,
    );
    if let Some(m) = evaluator {
        report.learning_curve.push(evaluate_policy(m, &report.policy)?.j);
    }
    for k in 0..cfg.iterations {
        let est = estimate_gradient(sim, param, &theta, cfg.rollouts, action_rng)?;
        for (t, g) in theta.iter_mut().zip(&est.mean) {
            *t += cfg.eta * g;
        }
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        if !(norm <= DIVERGENCE_NORM) {
            return Err(Error::Divergence { iteration: k + 1, norm });
        }
        report
            .diagnostics
            .gradient_norms
            .push(est.mean.iter().map(|g| g * g).sum::<f64>().sqrt());
        report.policy = param.policy(&theta)?;
        if let Some(m) = evaluator {
            report.learning_curve.push(evaluate_policy(m, &report.policy)?.j);
        }
    }
    Ok(PolicyGradientRun { report, theta })
}
