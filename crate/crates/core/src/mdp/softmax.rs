use serde::{Deserialize, Serialize};

use super::dp::{evaluate_policy, occupancy, solve_exact};
use super::model::FiniteMdp;
use super::policy::{Policy, PolicyKind};
use super::qfunction::QTable;
use crate::error::{Error, Result};

/// `pi_h(a|s) ∝ exp(beta Q_h(s,a))`, evaluated with max-subtraction.
pub fn softmax_policy(q: &QTable, beta: f64) -> Result<Policy> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!(
            "softmax temperature must be finite and nonnegative, got {beta}"
        )));
    }
    let (h, ns, na) = (q.horizon(), q.n_states(), q.n_actions());
    let mut probs = Vec::with_capacity(h * ns * na);
    for step in 0..h {
        for s in 0..ns {
            probs.extend(softmax_row(q.row(step, s), beta));
        }
    }
    Policy::with_kind(h, ns, na, probs, PolicyKind::Softmax { beta })
}

pub(crate) fn softmax_row(row: &[f64], beta: f64) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = row.iter().map(|v| (beta * (v - max)).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Both sides of the softmax suboptimality bound
/// `0 <= J* - J(pi^{Q,beta}) <= H log|A| / beta + 2 beta H sum_h E max_a |Q*_h - Q_h|`,
/// where the expectation runs over the state laws of `pi^{Q*,beta}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SoftmaxGapBound {
    pub lhs: f64,
    pub rhs: f64,
    pub entropy_term: f64,
    pub mismatch_term: f64,
}

impl SoftmaxGapBound {
    /// `rhs - lhs`, and `lhs` itself; both must be nonnegative.
    pub fn slack(&self) -> f64 {
        (self.rhs - self.lhs).min(self.lhs)
    }
}

/// Computes every quantity of the softmax bound exactly by dynamic programming.
pub fn softmax_gap_bound(mdp: &FiniteMdp, q: &QTable, beta: f64) -> Result<SoftmaxGapBound> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!(
            "the bound needs a positive finite beta, got {beta}"
        )));
    }
    if !q.same_shape(mdp.horizon(), mdp.n_states(), mdp.n_actions()) {
        return Err(Error::invalid("Q table shape does not match the MDP"));
    }
    let exact = solve_exact(mdp);
    let played = evaluate_policy(mdp, &softmax_policy(q, beta)?)?;
    let lhs = exact.jstar - played.j;

    let reference = softmax_policy(&exact.qstar, beta)?;
    let laws = occupancy(mdp, &reference)?;
    let horizon = mdp.horizon() as f64;
    let mut expected_gap = 0.0;
    for (h, law) in laws.iter().enumerate() {
        for (s, ps) in law.state_marginal().into_iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            let worst = q
                .row(h, s)
                .iter()
                .zip(exact.qstar.row(h, s))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            expected_gap += ps * worst;
        }
    }
    let entropy_term = horizon * (mdp.n_actions() as f64).ln() / beta;
    let mismatch_term = 2.0 * beta * horizon * expected_gap;
    Ok(SoftmaxGapBound {
        lhs,
        rhs: entropy_term + mismatch_term,
        entropy_term,
        mismatch_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rows_give_uniform() {
        let q = QTable::from_values(1, 1, 4, vec![3.0; 4]).unwrap();
        for beta in [0.0, 1.0, 1e6] {
            let p = softmax_policy(&q, beta).unwrap();
            assert!(p.probs(0, 0).iter().all(|v| (v - 0.25).abs() < 1e-15));
        }
    }

    #[test]
    fn zero_beta_is_uniform() {
        let q = QTable::from_values(1, 1, 3, vec![0.0, 5.0, -2.0]).unwrap();
        let p = softmax_policy(&q, 0.0).unwrap();
        assert!(p.probs(0, 0).iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn two_action_gap_one_beta_ten() {
        let q = QTable::from_values(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let p = softmax_policy(&q, 10.0).unwrap();
        let expected = 1.0 / (1.0 + (-10.0f64).exp());
        assert!((p.prob(0, 0, 0) - expected).abs() < 1e-15);
        assert!((p.prob(0, 0, 0) - 0.9999546).abs() < 1e-7);
    }

    #[test]
    fn huge_beta_does_not_overflow() {
        let q = QTable::from_values(1, 1, 3, vec![1000.0, 999.0, -1000.0]).unwrap();
        let p = softmax_policy(&q, 1e6).unwrap();
        assert_eq!(p.probs(0, 0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn negative_beta_rejected() {
        let q = QTable::zeros(1, 1, 2);
        assert!(softmax_policy(&q, -1.0).is_err());
    }

    #[test]
    fn bound_rejects_zero_beta() {
        let mdp = FiniteMdp::from_tensors(1, 1, 2, vec![1.0, 1.0], vec![0.1, 0.9], vec![1.0]).unwrap();
        assert!(softmax_gap_bound(&mdp, &QTable::zeros(1, 1, 2), 0.0).is_err());
    }
}
