use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::FiniteMdp;
use crate::rng::{simplex_point, standard_normal};

use super::features::FeatureMap;

const NEGATIVE_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-10;

/// Linear MDP parameters: `r_h(s,a) = phi(s,a)^T theta_h` and
/// `P_h(. | s,a) = phi(s,a)^T M_h` with `M_h` a `d x |S|` matrix of
/// (possibly signed) measure weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMdpSpec {
    pub features: FeatureMap,
    pub reward_weights: Vec<DVector<f64>>,
    pub measure_weights: Vec<DMatrix<f64>>,
    pub initial: Vec<f64>,
}

impl LinearMdpSpec {
    pub fn horizon(&self) -> usize {
        self.reward_weights.len()
    }

    /// Random linear MDP of dimension `d`: features on the simplex, `M_h`
    /// rows Gaussian draws projected onto the simplex, `theta_h` uniform in
    /// `[0, 1]^d`. Induced rows are convex combinations of simplex rows, so
    /// validation always passes.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        n_states: usize,
        n_actions: usize,
        dim: usize,
        horizon: usize,
    ) -> Self {
        let features = FeatureMap::random_simplex(rng, n_states, n_actions, dim);
        let mut reward_weights = Vec::with_capacity(horizon);
        let mut measure_weights = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            reward_weights.push(DVector::from_fn(dim, |_, _| rng.random::<f64>()));
            let mut m = DMatrix::zeros(dim, n_states);
            for k in 0..dim {
                let draw: Vec<f64> = (0..n_states).map(|_| standard_normal(rng)).collect();
                for (j, v) in project_to_simplex(&draw).into_iter().enumerate() {
                    m[(k, j)] = v;
                }
            }
            measure_weights.push(m);
        }
        let initial = simplex_point(rng, n_states);
        LinearMdpSpec {
            features,
            reward_weights,
            measure_weights,
            initial,
        }
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Assembles the finite MDP induced by a linear spec.
///
/// Induced transition rows have negatives above `-1e-12` clamped to zero;
/// rows are renormalized only when their mass is off by more than `1e-12`
/// (and at most `1e-10`), so exact inputs such as the tabular embedding pass
/// through bitwise unchanged.
pub fn build_linear_mdp(spec: &LinearMdpSpec, states: Vec<String>, actions: Vec<String>) -> Result<FiniteMdp> {
    let fm = &spec.features;
    let (ns, na, d) = (fm.n_states(), fm.n_actions(), fm.dim());
    if states.len() != ns || actions.len() != na {
        return Err(Error::invalid(format!(
            "labels ({} states, {} actions) do not match the feature grid ({ns} x {na})",
            states.len(),
            actions.len()
        )));
    }
    let horizon = spec.horizon();
    if spec.measure_weights.len() != horizon {
        return Err(Error::DimensionMismatch {
            expected: horizon,
            got: spec.measure_weights.len(),
            context: "measure weights per step",
        });
    }
    let mut transition = Vec::with_capacity(horizon * ns * na * ns);
    let mut reward = Vec::with_capacity(horizon * ns * na);
    for h in 0..horizon {
        let theta = &spec.reward_weights[h];
        let m = &spec.measure_weights[h];
        if theta.len() != d || m.nrows() != d || m.ncols() != ns {
            return Err(Error::invalid(format!("step {h}: weights do not match d = {d}, |S| = {ns}")));
        }
        for s in 0..ns {
            for a in 0..na {
                let phi = fm.phi_slice(s, a);
                let r: f64 = phi.iter().zip(theta.iter()).map(|(p, t)| p * t).sum();
                let r = if (-NEGATIVE_TOL..0.0).contains(&r) {
                    0.0
                } else if r > 1.0 && r <= 1.0 + NEGATIVE_TOL {
                    1.0
                } else {
                    r
                };
                if !(0.0..=1.0).contains(&r) {
                    return Err(Error::invalid(format!(
                        "induced reward {r} outside [0, 1] at (h={h}, s={s}, a={a})"
                    )));
                }
                reward.push(r);
                let mut row: Vec<f64> = (0..ns)
                    .map(|j| phi.iter().enumerate().map(|(k, p)| p * m[(k, j)]).sum::<f64>())
                    .collect();
                for p in row.iter_mut() {
                    if *p < 0.0 {
                        if *p < -NEGATIVE_TOL {
                            return Err(Error::invalid(format!(
                                "induced transition row (h={h}, s={s}, a={a}) has negative mass {p}"
                            )));
                        }
                        *p = 0.0;
                    }
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > SUM_TOL {
                    return Err(Error::invalid(format!(
                        "induced transition row (h={h}, s={s}, a={a}) sums to {total}"
                    )));
                }
                if (total - 1.0).abs() > 1e-12 {
                    row.iter_mut().for_each(|p| *p /= total);
                }
                transition.extend(row);
            }
        }
    }
    FiniteMdp::new(horizon, states, actions, transition, reward, spec.initial.clone())
}

/// Canonical one-hot embedding of a tabular MDP as a linear MDP with `d = |S||A|`.
pub fn tabular_embedding(mdp: &FiniteMdp) -> LinearMdpSpec {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let d = ns * na;
    let features = FeatureMap::tabular_onehot(ns, na);
    let mut reward_weights = Vec::with_capacity(mdp.horizon());
    let mut measure_weights = Vec::with_capacity(mdp.horizon());
    for h in 0..mdp.horizon() {
        reward_weights.push(DVector::from_column_slice(mdp.step_rewards(h)));
        let mut m = DMatrix::zeros(d, ns);
        for s in 0..ns {
            for a in 0..na {
                for (j, &p) in mdp.transition_row(h, s, a).iter().enumerate() {
                    m[(s * na + a, j)] = p;
                }
            }
        }
        measure_weights.push(m);
    }
    LinearMdpSpec {
        features,
        reward_weights,
        measure_weights,
        initial: mdp.initial().to_vec(),
    }
}
