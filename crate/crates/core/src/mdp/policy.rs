use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::FiniteMdp;
use super::qfunction::QTable;
use crate::error::{Error, Result};
use crate::rng::{sample_categorical, simplex_point};

/// How a policy table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyKind {
    Table,
    Greedy,
    Softmax { beta: f64 },
    ParameterizedSoftmax,
}

/// Markov policy: one conditional action distribution per `(h, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
    kind: PolicyKind,
}

const POLICY_TOL: f64 = 1e-12;

impl Policy {
    /// Validated table policy; `probs` is laid out `[h][s][a]`.
    pub fn from_table(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        probs: Vec<f64>,
    ) -> Result<Self> {
        Self::with_kind(horizon, n_states, n_actions, probs, PolicyKind::Table)
    }

    pub(crate) fn with_kind(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        probs: Vec<f64>,
        kind: PolicyKind,
    ) -> Result<Self> {
        if probs.len() != horizon * n_states * n_actions {
            return Err(Error::DimensionMismatch {
                expected: horizon * n_states * n_actions,
                got: probs.len(),
                context: "policy table",
            });
        }
        for (i, row) in probs.chunks(n_actions.max(1)).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) || (total - 1.0).abs() > POLICY_TOL {
                return Err(Error::invalid(format!(
                    "policy row (h={}, s={}) is not a distribution (sum {total})",
                    i / n_states.max(1),
                    i % n_states.max(1)
                )));
            }
        }
        Ok(Policy {
            horizon,
            n_states,
            n_actions,
            probs,
            kind,
        })
    }

    /// Deterministic policy from `choice[h * |S| + s]`.
    pub fn deterministic(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        choice: &[usize],
    ) -> Result<Self> {
        if choice.len() != horizon * n_states {
            return Err(Error::DimensionMismatch {
                expected: horizon * n_states,
                got: choice.len(),
                context: "deterministic policy choices",
            });
        }
        let mut probs = vec![0.0; horizon * n_states * n_actions];
        for (i, &a) in choice.iter().enumerate() {
            if a >= n_actions {
                return Err(Error::invalid(format!("action {a} out of range")));
            }
            probs[i * n_actions + a] = 1.0;
        }
        Ok(Policy {
            horizon,
            n_states,
            n_actions,
            probs,
            kind: PolicyKind::Table,
        })
    }

    pub fn uniform(horizon: usize, n_states: usize, n_actions: usize) -> Self {
        Policy {
            horizon,
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; horizon * n_states * n_actions],
            kind: PolicyKind::Table,
        }
    }

    /// Random stochastic policy with flat-Dirichlet rows.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        horizon: usize,
        n_states: usize,
        n_actions: usize,
    ) -> Self {
        let mut probs = Vec::with_capacity(horizon * n_states * n_actions);
        for _ in 0..horizon * n_states {
            probs.extend(simplex_point(rng, n_actions));
        }
        Self::from_table(horizon, n_states, n_actions, probs).expect("simplex rows")
    }

    /// Greedy policy of `q` with lowest-index tie-breaking.
    pub fn greedy(q: &QTable) -> Self {
        let (h, ns, na) = (q.horizon(), q.n_states(), q.n_actions());
        let mut probs = vec![0.0; h * ns * na];
        for step in 0..h {
            for s in 0..ns {
                probs[(step * ns + s) * na + q.argmax(step, s)] = 1.0;
            }
        }
        Policy {
            horizon: h,
            n_states: ns,
            n_actions: na,
            probs,
            kind: PolicyKind::Greedy,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// `pi_h(. | s)`.
    pub fn probs(&self, h: usize, s: usize) -> &[f64] {
        let start = (h * self.n_states + s) * self.n_actions;
        &self.probs[start..start + self.n_actions]
    }

    pub fn prob(&self, h: usize, s: usize, a: usize) -> f64 {
        self.probs[(h * self.n_states + s) * self.n_actions + a]
    }

    pub fn table(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, rng: &mut R, h: usize, s: usize) -> usize {
        sample_categorical(rng, self.probs(h, s))
    }

    pub fn check_compatible(&self, mdp: &FiniteMdp) -> Result<()> {
        if self.horizon != mdp.horizon()
            || self.n_states != mdp.n_states()
            || self.n_actions != mdp.n_actions()
        {
            return Err(Error::invalid(format!(
                "policy shape (H={}, |S|={}, |A|={}) does not match MDP (H={}, |S|={}, |A|={})",
                self.horizon,
                self.n_states,
                self.n_actions,
                mdp.horizon(),
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        Ok(())
    }
}
