use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::spd_solve;
use crate::linear::UcbBonus;
use crate::mdp::{solve_exact, FiniteMdp, Policy, QTable};
use crate::simulator::{EpisodicSimulator, RegretLedger};

use super::function_class::FunctionClass;
use super::report::AlgorithmReport;

/// Which `n` multiplies `lambda` in `Lambda = sum phi phi^T + n lambda I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularizerMode {
    /// `n = K`, the declared number of episodes.
    #[default]
    Budget,
    /// `n = k`, the number of episodes collected so far (at least 1).
    Count,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsviConfig {
    pub episodes: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Explicit bonus scale; overrides `beta_scale` when set.
    #[serde(default)]
    pub beta: Option<f64>,
    /// `c` in `beta = c d H sqrt(log(2 d K H))`.
    #[serde(default = "default_beta_scale")]
    pub beta_scale: f64,
    #[serde(default)]
    pub regularizer: RegularizerMode,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_beta_scale() -> f64 {
    1.0
}

impl LsviConfig {
    pub fn new(episodes: usize) -> Self {
        LsviConfig {
            episodes,
            lambda: default_lambda(),
            beta: None,
            beta_scale: default_beta_scale(),
            regularizer: RegularizerMode::Budget,
        }
    }

    pub fn resolved_beta(&self, dim: usize, horizon: usize) -> f64 {
        self.beta
            .unwrap_or_else(|| scaled_beta(self.beta_scale, dim, horizon, self.episodes))
    }
}

/// `c d H sqrt(log(2 d K H))`.
pub fn scaled_beta(c: f64, dim: usize, horizon: usize, episodes: usize) -> f64 {
    let (d, h, k) = (dim as f64, horizon as f64, episodes.max(1) as f64);
    c * d * h * (2.0 * d * k * h).ln().max(0.0).sqrt()
}

/// Sufficient statistics of the transitions observed at one step.
struct StepData {
    counts: Vec<f64>,
    reward_sums: Vec<f64>,
    /// `[pair][s']`
    next_counts: Vec<f64>,
}

/// Optimistic least-squares value iteration on a linear function class.
///
/// Before every episode a backward pass fits `w_h` by ridge regression on all
/// past transitions at step `h`, adds the bonus `beta ||phi||_{Lambda^{-1}}`,
/// and clips to `[0, H]`; the episode is then played greedily. With an
/// `evaluator`, the exact regret of every played policy is recorded.
pub fn lsvi_ucb(
    sim: &mut EpisodicSimulator<&FiniteMdp>,
    fc: &FunctionClass,
    cfg: &LsviConfig,
    evaluator: Option<&FiniteMdp>,
) -> Result<AlgorithmReport> {
    let features = match fc {
        FunctionClass::Linear { features, .. } => features,
        FunctionClass::Kernel { .. } => {
            return Err(Error::invalid("optimistic value iteration needs a linear function class"))
        }
    };
    if !(cfg.lambda > 0.0) {
        return Err(Error::invalid("lsvi-ucb needs lambda > 0"));
    }
    let (horizon, na) = (sim.horizon(), sim.n_actions());
    let ns = features.n_states();
    if features.n_actions() != na {
        return Err(Error::invalid("feature map action count does not match the simulator"));
    }
    if let Some(m) = evaluator {
        if m.n_states() != ns || m.n_actions() != na || m.horizon() != horizon {
            return Err(Error::invalid("evaluator MDP does not match the simulator"));
        }
    }
    let d = features.dim();
    let beta = cfg.resolved_beta(d, horizon);
    let n_pairs = ns * na;
    let phis: Vec<DVector<f64>> = (0..n_pairs).map(|p| features.phi(p / na, p % na)).collect();

    let mut data: Vec<StepData> = (0..horizon)
        .map(|_| StepData {
            counts: vec![0.0; n_pairs],
            reward_sums: vec![0.0; n_pairs],
            next_counts: vec![0.0; n_pairs * ns],
        })
        .collect();
    let qstar = evaluator.map(|m| solve_exact(m).qstar);
    let mut ledger = evaluator.map(RegretLedger::new);
    let mut report = AlgorithmReport::new(
        "lsvi-ucb",
        sim.seed(),
        json!({
            "episodes": cfg.episodes,
            "lambda": cfg.lambda,
            "beta": beta,
            "beta_scale": cfg.beta_scale,
            "regularizer": cfg.regularizer,
        }),
        Policy::uniform(horizon, ns, na),
    );
    let cap = horizon as f64;
    let mut q = QTable::zeros(horizon, ns, na);

    for k in 0..cfg.episodes {
        let n_reg = match cfg.regularizer {
            RegularizerMode::Budget => cfg.episodes,
            RegularizerMode::Count => k.max(1),
        } as f64;
        let mut v_next = vec![0.0; ns];
        let mut bonus_max = 0.0f64;
        let mut clipped = 0;
        for h in (0..horizon).rev() {
            let sd = &data[h];
            let mut lambda_m = DMatrix::identity(d, d) * (n_reg * cfg.lambda);
            let mut b = DVector::zeros(d);
            for (p, phi) in phis.iter().enumerate() {
                let c = sd.counts[p];
                if c == 0.0 {
                    continue;
                }
                lambda_m.ger(c, phi, phi, 1.0);
                let cont: f64 = sd.next_counts[p * ns..(p + 1) * ns]
                    .iter()
                    .zip(&v_next)
                    .map(|(n, v)| n * v)
                    .sum();
                b.axpy(sd.reward_sums[p] + cont, phi, 1.0);
            }
            let w = spd_solve(&lambda_m, &b, "lsvi design").map_err(|e| e.at_step(h))?;
            let bonus = UcbBonus::new(&lambda_m).map_err(|e| e.at_step(h))?;
            for (p, phi) in phis.iter().enumerate() {
                let bo = bonus.bonus(phi.as_slice(), beta);
                bonus_max = bonus_max.max(bo);
                let raw = phi.dot(&w) + bo;
                let val = raw.clamp(0.0, cap);
                if val != raw {
                    clipped += 1;
                }
                q.set(h, p / na, p % na, val);
            }
            for (s, v) in v_next.iter_mut().enumerate() {
                *v = q.max_value(h, s);
            }
        }
        let pi = Policy::greedy(&q);
        if let (Some(l), Some(m)) = (ledger.as_mut(), evaluator) {
            l.record(m, &pi)?;
        }
        if let Some(qs) = &qstar {
            let hits = q
                .values()
                .iter()
                .zip(qs.values())
                .filter(|(a, b)| **a >= **b - 1e-12)
                .count();
            report.diagnostics.optimism.push(hits as f64 / q.values().len() as f64);
        }
        report.diagnostics.bonus_max.push(bonus_max);
        report.diagnostics.clipped.push(clipped);

        let traj = sim.rollout_with(|h, &s| q.argmax(h, s))?;
        for t in traj.steps {
            let p = t.s * na + t.a;
            let sd = &mut data[t.h];
            sd.counts[p] += 1.0;
            sd.reward_sums[p] += t.r;
            sd.next_counts[p * ns + t.s_next] += 1.0;
        }
        report.policy = pi;
    }
    report.q = Some(q);
    report.regret = ledger;
    Ok(report)
}

/// Slope of the least-squares line through `(ln k, ln R(k))` over the
/// second half of a cumulative-regret curve (`k` is 1-based). Points with
/// nonpositive regret are skipped.
pub fn loglog_slope_second_half(curve: &[f64]) -> Option<f64> {
    let k = curve.len();
    let pts: Vec<(f64, f64)> = (k / 2..k)
        .filter(|&i| curve[i] > 0.0)
        .map(|i| (((i + 1) as f64).ln(), curve[i].ln()))
        .collect();
    loglog_fit(&pts)
}

/// Least-squares slope of `y` on `x`.
pub fn loglog_fit(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Kernel;
    use crate::linear::tabular_embedding;
    use crate::linear::FeatureMap;
    use crate::rng::{stream, Stream};

    fn linear_class(features: FeatureMap, lambda: f64) -> FunctionClass {
        FunctionClass::Linear { features, lambda }
    }

    #[test]
    fn single_action_has_zero_regret() {
        let mut rng = stream(1, Stream::Instance);
        let mdp = FiniteMdp::random(&mut rng, 3, 1, 2);
        let fc = linear_class(tabular_embedding(&mdp).features, 1.0);
        let mut sim = EpisodicSimulator::new(&mdp, 1);
        let rep = lsvi_ucb(&mut sim, &fc, &LsviConfig::new(50), Some(&mdp)).unwrap();
        assert!(rep.regret.unwrap().cumulative().abs() < 1e-12);
    }

    #[test]
    fn regret_bounded_and_q_clipped() {
        let mut rng = stream(2, Stream::Instance);
        let mdp = FiniteMdp::random(&mut rng, 3, 2, 3);
        let fc = linear_class(tabular_embedding(&mdp).features, 1.0);
        let mut sim = EpisodicSimulator::new(&mdp, 2);
        let rep = lsvi_ucb(&mut sim, &fc, &LsviConfig::new(100), Some(&mdp)).unwrap();
        assert!(rep.regret.as_ref().unwrap().cumulative() <= 100.0 * 3.0 + 1e-6);
        assert!(rep.q.unwrap().values().iter().all(|v| (0.0..=3.0).contains(v)));
        assert_eq!(rep.diagnostics.bonus_max.len(), 100);
        assert_eq!(sim.episodes(), 100);
    }

    #[test]
    fn kernel_class_rejected() {
        let mdp = FiniteMdp::from_tensors(1, 1, 1, vec![1.0], vec![0.0], vec![1.0]).unwrap();
        let fc = FunctionClass::Kernel {
            kernel: Kernel::gaussian(1.0, 1),
            embedding: vec![vec![0.0]],
            n_actions: 1,
            lambda: 1.0,
        };
        let mut sim = EpisodicSimulator::new(&mdp, 0);
        assert!(lsvi_ucb(&mut sim, &fc, &LsviConfig::new(5), None).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let curve: Vec<f64> = (1..=400).map(|k| 3.0 * (k as f64).powf(0.5)).collect();
        assert!((loglog_slope_second_half(&curve).unwrap() - 0.5).abs() < 1e-12);
    }
}
