//! Exact backward and forward recursions on a [`FiniteMdp`].

use serde::{Deserialize, Serialize};

use super::model::FiniteMdp;
use super::policy::Policy;
use super::qfunction::QTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub qstar: QTable,
    pub jstar: f64,
    /// Greedy in `qstar`, lowest action index on ties.
    pub pistar: Policy,
}

#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub q: QTable,
    pub j: f64,
}

/// Distribution of `(S_h, A_h)`, flat over pairs in `s * |A| + a` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeasure {
    pub step: usize,
    pub n_actions: usize,
    pub probs: Vec<f64>,
}

impl OccupancyMeasure {
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    /// Marginal law of `S_h`.
    pub fn state_marginal(&self) -> Vec<f64> {
        self.probs
            .chunks(self.n_actions)
            .map(|row| row.iter().sum())
            .collect()
    }
}

/// `sum_{s'} P(s'|h,s,a) f(s')`.
#[inline]
fn expect_next(mdp: &FiniteMdp, h: usize, s: usize, a: usize, f: &[f64]) -> f64 {
    mdp.transition_row(h, s, a)
        .iter()
        .zip(f)
        .map(|(p, v)| p * v)
        .sum()
}

/// Bellman operator `(T_h f)(s, a) = r(h, s, a) + E[f(s')]` for a state-value vector `f`.
pub fn apply_bellman(mdp: &FiniteMdp, h: usize, f: &[f64]) -> Result<Vec<f64>> {
    mdp.check_step(h)?;
    if f.len() != mdp.n_states() {
        return Err(Error::DimensionMismatch {
            expected: mdp.n_states(),
            got: f.len(),
            context: "state-value vector",
        });
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut out = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            out.push(mdp.reward(h, s, a) + expect_next(mdp, h, s, a, f));
        }
    }
    Ok(out)
}

/// Optimality operator `r + E[max_a' g(s', a')]` for a state-action table `g` (`[s][a]`).
pub fn apply_bellman_optimal(mdp: &FiniteMdp, h: usize, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != mdp.n_pairs() {
        return Err(Error::DimensionMismatch {
            expected: mdp.n_pairs(),
            got: g.len(),
            context: "state-action table",
        });
    }
    let v: Vec<f64> = g
        .chunks(mdp.n_actions())
        .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    apply_bellman(mdp, h, &v)
}

/// Backward induction for `Q*`, `J*` and a greedy optimal policy.
pub fn solve_exact(mdp: &FiniteMdp) -> ExactSolution {
    let (horizon, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut q = QTable::zeros(horizon, ns, na);
    let mut next_v = vec![0.0; ns];
    for h in (0..horizon).rev() {
        let qh = apply_bellman(mdp, h, &next_v).expect("shapes agree");
        q.step_mut(h).copy_from_slice(&qh);
        next_v = (0..ns).map(|s| q.max_value(h, s)).collect();
    }
    let jstar = mdp
        .initial()
        .iter()
        .zip(&next_v)
        .map(|(m, v)| m * v)
        .sum();
    let pistar = Policy::greedy(&q);
    ExactSolution {
        qstar: q,
        jstar,
        pistar,
    }
}

/// `V_h^pi(s) = sum_a pi_h(a|s) Q_h(s, a)` for all states.
pub fn policy_values(q: &QTable, pi: &Policy, h: usize) -> Vec<f64> {
    (0..q.n_states())
        .map(|s| {
            q.row(h, s)
                .iter()
                .zip(pi.probs(h, s))
                .map(|(v, p)| v * p)
                .sum()
        })
        .collect()
}

/// Exact `Q^pi` and `J(pi)` by backward recursion.
pub fn evaluate_policy(mdp: &FiniteMdp, pi: &Policy) -> Result<PolicyEvaluation> {
    pi.check_compatible(mdp)?;
    let (horizon, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut q = QTable::zeros(horizon, ns, na);
    let mut next_v = vec![0.0; ns];
    for h in (0..horizon).rev() {
        let qh = apply_bellman(mdp, h, &next_v)?;
        q.step_mut(h).copy_from_slice(&qh);
        next_v = policy_values(&q, pi, h);
    }
    let j = mdp.initial().iter().zip(&next_v).map(|(m, v)| m * v).sum();
    Ok(PolicyEvaluation { q, j })
}

/// Forward recursion for the state-action laws `rho_h` of `pi`, one per step.
pub fn occupancy(mdp: &FiniteMdp, pi: &Policy) -> Result<Vec<OccupancyMeasure>> {
    pi.check_compatible(mdp)?;
    let (horizon, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut out = Vec::with_capacity(horizon);
    let mut state_law = mdp.initial().to_vec();
    for h in 0..horizon {
        let mut probs = vec![0.0; ns * na];
        for s in 0..ns {
            for (a, p) in pi.probs(h, s).iter().enumerate() {
                probs[s * na + a] = state_law[s] * p;
            }
        }
        if h + 1 < horizon {
            let mut next = vec![0.0; ns];
            for s in 0..ns {
                for a in 0..na {
                    let w = probs[s * na + a];
                    if w == 0.0 {
                        continue;
                    }
                    for (acc, p) in next.iter_mut().zip(mdp.transition_row(h, s, a)) {
                        *acc += w * p;
                    }
                }
            }
            state_law = next;
        }
        out.push(OccupancyMeasure {
            step: h,
            n_actions: na,
            probs,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn single_state(horizon: usize, rewards: Vec<f64>) -> FiniteMdp {
        let na = rewards.len() / horizon;
        FiniteMdp::from_tensors(horizon, 1, na, vec![1.0; horizon * na], rewards, vec![1.0]).unwrap()
    }

    #[test]
    fn constant_reward_chain() {
        let mdp = single_state(3, vec![1.0; 3]);
        let sol = solve_exact(&mdp);
        assert_eq!(sol.jstar, 3.0);
    }

    #[test]
    fn two_armed_single_step() {
        let mdp = single_state(1, vec![0.2, 0.7]);
        let sol = solve_exact(&mdp);
        assert!((sol.jstar - 0.7).abs() < 1e-15);
        assert_eq!(sol.pistar.probs(0, 0), &[0.0, 1.0]);
    }

    #[test]
    fn zero_reward_gives_zero_value() {
        let mut rng = stream(2, Stream::Instance);
        let base = FiniteMdp::random(&mut rng, 3, 2, 3);
        let mdp = base.with_rewards(vec![0.0; 18], (0.0, 1.0)).unwrap();
        for _ in 0..5 {
            let pi = Policy::random(&mut rng, 3, 3, 2);
            assert_eq!(evaluate_policy(&mdp, &pi).unwrap().j, 0.0);
        }
    }

    #[test]
    fn optimal_policy_attains_jstar() {
        let mut rng = stream(3, Stream::Instance);
        let mdp = FiniteMdp::random(&mut rng, 4, 3, 3);
        let sol = solve_exact(&mdp);
        let ev = evaluate_policy(&mdp, &sol.pistar).unwrap();
        assert!((ev.j - sol.jstar).abs() < 1e-10);
        assert!(ev.q.max_abs_diff(&sol.qstar) < 1e-12);
    }

    #[test]
    fn bellman_with_zero_next_value_is_reward() {
        let mut rng = stream(5, Stream::Instance);
        let mdp = FiniteMdp::random(&mut rng, 3, 2, 2);
        let out = apply_bellman(&mdp, 1, &[0.0; 3]).unwrap();
        assert_eq!(out.as_slice(), mdp.step_rewards(1));
    }

    #[test]
    fn bellman_rejects_bad_shapes() {
        let mdp = single_state(1, vec![0.5]);
        assert!(apply_bellman(&mdp, 0, &[0.0, 0.0]).is_err());
        assert!(apply_bellman(&mdp, 1, &[0.0]).is_err());
        assert!(apply_bellman_optimal(&mdp, 0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn first_occupancy_is_product() {
        let mut rng = stream(6, Stream::Instance);
        let mdp = FiniteMdp::random(&mut rng, 3, 2, 3);
        let pi = Policy::random(&mut rng, 3, 3, 2);
        let occ = occupancy(&mdp, &pi).unwrap();
        for s in 0..3 {
            for a in 0..2 {
                assert_eq!(occ[0].get(s, a), mdp.initial()[s] * pi.prob(0, s, a));
            }
        }
        for o in &occ {
            assert!((o.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn deterministic_chain_occupancy_is_point_mass() {
        // s0 -> s1 -> s2, one action
        let p = vec![
            0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, // h = 0
            0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, // h = 1
            0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, // h = 2
        ];
        let mdp = FiniteMdp::from_tensors(3, 3, 1, p, vec![0.0; 9], vec![1.0, 0.0, 0.0]).unwrap();
        let occ = occupancy(&mdp, &Policy::uniform(3, 3, 1)).unwrap();
        for (h, o) in occ.iter().enumerate() {
            let mut expected = vec![0.0; 3];
            expected[h] = 1.0;
            assert_eq!(o.probs, expected);
        }
    }

    #[test]
    fn mismatched_policy_rejected() {
        let mdp = single_state(2, vec![0.1, 0.2, 0.3, 0.4]);
        let pi = Policy::uniform(2, 1, 3);
        assert!(evaluate_policy(&mdp, &pi).is_err());
        assert!(occupancy(&mdp, &pi).is_err());
    }
}
