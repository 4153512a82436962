use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::simplex_point;

/// Tolerance on the total mass of every probability vector of the model.
pub const PROB_TOL: f64 = 1e-12;

/// Enumerated finite-horizon, time-inhomogeneous MDP `(S, A, H, P, r, mu)`.
///
/// Steps are 0-based: `h` ranges over `0..horizon`. Transition rows are
/// stored flat in `[h][s][a][s']` order and rewards in `[h][s][a]` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct FiniteMdp {
    horizon: usize,
    states: Vec<String>,
    actions: Vec<String>,
    transition: Vec<f64>,
    reward: Vec<f64>,
    initial: Vec<f64>,
    reward_range: (f64, f64),
}

impl FiniteMdp {
    /// Builds and validates an MDP with rewards in `[0, 1]`.
    pub fn new(
        horizon: usize,
        states: Vec<String>,
        actions: Vec<String>,
        transition: Vec<f64>,
        reward: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        Self::with_reward_range(horizon, states, actions, transition, reward, initial, (0.0, 1.0))
    }

    /// Like [`FiniteMdp::new`] but validates rewards against `reward_range`
    /// instead of `[0, 1]`. Used for internal instances such as fitted-reward
    /// models whose rewards may leave the unit interval.
    pub fn with_reward_range(
        horizon: usize,
        states: Vec<String>,
        actions: Vec<String>,
        transition: Vec<f64>,
        reward: Vec<f64>,
        initial: Vec<f64>,
        reward_range: (f64, f64),
    ) -> Result<Self> {
        let mdp = FiniteMdp {
            horizon,
            states,
            actions,
            transition,
            reward,
            initial,
            reward_range,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    /// Builds an MDP with generated labels `s0, s1, ...` and `a0, a1, ...`.
    pub fn from_tensors(
        horizon: usize,
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            horizon,
            default_labels("s", n_states),
            default_labels("a", n_actions),
            transition,
            reward,
            initial,
        )
    }

    /// Random MDP: Dirichlet transition rows, uniform rewards, Dirichlet initial law.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        n_states: usize,
        n_actions: usize,
        horizon: usize,
    ) -> Self {
        let mut transition = Vec::with_capacity(horizon * n_states * n_actions * n_states);
        for _ in 0..horizon * n_states * n_actions {
            transition.extend(simplex_point(rng, n_states));
        }
        let reward = (0..horizon * n_states * n_actions)
            .map(|_| rng.random::<f64>())
            .collect();
        let initial = simplex_point(rng, n_states);
        Self::from_tensors(horizon, n_states, n_actions, transition, reward, initial)
            .expect("random construction is valid")
    }

    /// Random MDP whose transitions are point masses.
    pub fn random_deterministic<R: Rng + ?Sized>(
        rng: &mut R,
        n_states: usize,
        n_actions: usize,
        horizon: usize,
    ) -> Self {
        let mut transition = vec![0.0; horizon * n_states * n_actions * n_states];
        for row in transition.chunks_mut(n_states) {
            row[rng.random_range(0..n_states)] = 1.0;
        }
        let reward = (0..horizon * n_states * n_actions)
            .map(|_| rng.random::<f64>())
            .collect();
        let initial = simplex_point(rng, n_states);
        Self::from_tensors(horizon, n_states, n_actions, transition, reward, initial)
            .expect("random construction is valid")
    }

    fn validate(&self) -> Result<()> {
        let (h, ns, na) = (self.horizon, self.states.len(), self.actions.len());
        if h == 0 || ns == 0 || na == 0 {
            return Err(Error::invalid(format!(
                "horizon, state count and action count must be positive (H={h}, |S|={ns}, |A|={na})"
            )));
        }
        let (lo, hi) = self.reward_range;
        if !(lo <= hi) {
            return Err(Error::invalid(format!("empty reward range [{lo}, {hi}]")));
        }
        if self.transition.len() != h * ns * na * ns {
            return Err(Error::DimensionMismatch {
                expected: h * ns * na * ns,
                got: self.transition.len(),
                context: "transition tensor",
            });
        }
        if self.reward.len() != h * ns * na {
            return Err(Error::DimensionMismatch {
                expected: h * ns * na,
                got: self.reward.len(),
                context: "reward tensor",
            });
        }
        if self.initial.len() != ns {
            return Err(Error::DimensionMismatch {
                expected: ns,
                got: self.initial.len(),
                context: "initial distribution",
            });
        }
        for step in 0..h {
            for s in 0..ns {
                for a in 0..na {
                    let row = self.transition_row(step, s, a);
                    check_distribution(row).map_err(|why| {
                        Error::invalid(format!(
                            "transition row (h={step}, s={s}, a={a}) {why}"
                        ))
                    })?;
                    let r = self.reward(step, s, a);
                    if !r.is_finite() || r < lo || r > hi {
                        return Err(Error::invalid(format!(
                            "reward (h={step}, s={s}, a={a}) = {r} outside [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
        check_distribution(&self.initial)
            .map_err(|why| Error::invalid(format!("initial distribution {why}")))
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Number of state-action pairs.
    pub fn n_pairs(&self) -> usize {
        self.states.len() * self.actions.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn reward_range(&self) -> (f64, f64) {
        self.reward_range
    }

    /// `P(. | h, s, a)` as a slice over next states.
    pub fn transition_row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let ns = self.n_states();
        let start = ((h * ns + s) * self.n_actions() + a) * ns;
        &self.transition[start..start + ns]
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.reward[(h * self.n_states() + s) * self.n_actions() + a]
    }

    /// Rewards of step `h` in `[s][a]` order.
    pub fn step_rewards(&self, h: usize) -> &[f64] {
        let n = self.n_pairs();
        &self.reward[h * n..(h + 1) * n]
    }

    pub fn transition_tensor(&self) -> &[f64] {
        &self.transition
    }

    pub fn reward_tensor(&self) -> &[f64] {
        &self.reward
    }

    /// Same transitions and initial law, new reward tensor.
    pub fn with_rewards(&self, reward: Vec<f64>, reward_range: (f64, f64)) -> Result<Self> {
        Self::with_reward_range(
            self.horizon,
            self.states.clone(),
            self.actions.clone(),
            self.transition.clone(),
            reward,
            self.initial.clone(),
            reward_range,
        )
    }

    pub fn check_step(&self, h: usize) -> Result<()> {
        if h >= self.horizon {
            return Err(Error::invalid(format!(
                "step {h} outside 0..{}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn check_pair(&self, h: usize, s: usize, a: usize) -> Result<()> {
        self.check_step(h)?;
        if s >= self.n_states() || a >= self.n_actions() {
            return Err(Error::invalid(format!(
                "pair (s={s}, a={a}) outside {}x{}",
                self.n_states(),
                self.n_actions()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("MDP document: {e}")))
    }
}

pub fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Checks nonnegativity and unit mass within [`PROB_TOL`].
pub fn check_distribution(p: &[f64]) -> std::result::Result<(), String> {
    if let Some((i, v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite() || **v < 0.0)
    {
        return Err(format!("has invalid entry {v} at index {i}"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(format!("sums to {total:.15}"));
    }
    Ok(())
}

/// JSON layout: `{H, states, actions, P[h][s][a][s'], r[h][s][a], mu}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MdpDocument {
    #[serde(rename = "H")]
    horizon: usize,
    states: Vec<String>,
    actions: Vec<String>,
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<Vec<f64>>>>,
    r: Vec<Vec<Vec<f64>>>,
    mu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reward_range: Option<[f64; 2]>,
}

impl From<FiniteMdp> for MdpDocument {
    fn from(m: FiniteMdp) -> Self {
        let (ns, na) = (m.n_states(), m.n_actions());
        let p = (0..m.horizon)
            .map(|h| {
                (0..ns)
                    .map(|s| (0..na).map(|a| m.transition_row(h, s, a).to_vec()).collect())
                    .collect()
            })
            .collect();
        let r = (0..m.horizon)
            .map(|h| {
                (0..ns)
                    .map(|s| (0..na).map(|a| m.reward(h, s, a)).collect())
                    .collect()
            })
            .collect();
        let reward_range = (m.reward_range != (0.0, 1.0))
            .then_some([m.reward_range.0, m.reward_range.1]);
        MdpDocument {
            horizon: m.horizon,
            states: m.states,
            actions: m.actions,
            p,
            r,
            mu: m.initial,
            reward_range,
        }
    }
}

impl TryFrom<MdpDocument> for FiniteMdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        let (h, ns, na) = (doc.horizon, doc.states.len(), doc.actions.len());
        let shape_err = |what: &str| Error::invalid(format!("{what} has the wrong shape for H={h}, |S|={ns}, |A|={na}"));
        if doc.p.len() != h
            || doc.p.iter().any(|ph| {
                ph.len() != ns || ph.iter().any(|ps| ps.len() != na || ps.iter().any(|row| row.len() != ns))
            })
        {
            return Err(shape_err("P"));
        }
        if doc.r.len() != h || doc.r.iter().any(|rh| rh.len() != ns || rh.iter().any(|rs| rs.len() != na)) {
            return Err(shape_err("r"));
        }
        let transition = doc.p.into_iter().flatten().flatten().flatten().collect();
        let reward = doc.r.into_iter().flatten().flatten().collect();
        let range = doc.reward_range.map(|[lo, hi]| (lo, hi)).unwrap_or((0.0, 1.0));
        FiniteMdp::with_reward_range(h, doc.states, doc.actions, transition, reward, doc.mu, range)
    }
}
