use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::kernel::{krr_solve, GramMatrix, Kernel};
use crate::linalg::{pinv_sym, PINV_RELATIVE_CUTOFF};
use crate::mdp::{check_distribution, solve_exact, FiniteMdp};
use crate::rng::sample_categorical;
use crate::simulator::GenerativeModel;

use super::report::AlgorithmReport;

/// How the `n` query pairs of each step are chosen from `nu_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSampling {
    /// Independent draws from `nu_hat`.
    #[default]
    Iid,
    /// The support of `nu_hat` in index order, cycled to length `n`.
    Enumerate,
}

/// Norm-constrained kernel least squares `min_{||r||_H <= 1} (1/n) sum (r(z_i) - y_i)^2`.
#[derive(Debug, Clone)]
pub struct ConstrainedFit {
    pub alpha: DVector<f64>,
    /// Ridge multiplier reached (0 for the unconstrained minimum-norm fit).
    pub lambda: f64,
    pub norm: f64,
}

fn rkhs_norm_of(gram: &DMatrix<f64>, alpha: &DVector<f64>) -> f64 {
    alpha.dot(&(gram * alpha)).max(0.0).sqrt()
}

/// Rounding slack on the unit-ball test, so a target of norm exactly 1 is
/// not pushed into the ridge branch.
const BALL_SLACK: f64 = 1e-6;

/// Uses the minimum-norm least-squares fit when its RKHS norm is at most 1
/// (up to [`BALL_SLACK`]), otherwise bisects `log lambda` until the ridge fit has norm in `[0.99, 1]`.
pub fn norm_constrained_fit(gram: &DMatrix<f64>, y: &DVector<f64>) -> Result<ConstrainedFit> {
    let alpha = pinv_sym(gram, PINV_RELATIVE_CUTOFF) * y;
    let norm = rkhs_norm_of(gram, &alpha);
    if norm <= 1.0 + BALL_SLACK {
        return Ok(ConstrainedFit {
            alpha,
            lambda: 0.0,
            norm,
        });
    }
    let (mut lo, mut hi) = (-14.0f64, 8.0f64);
    let mut last_gap = f64::INFINITY;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let lambda = 10f64.powf(mid);
        let alpha = krr_solve(gram, y, lambda)?;
        let norm = rkhs_norm_of(gram, &alpha);
        if (0.99..=1.0).contains(&norm) {
            return Ok(ConstrainedFit { alpha, lambda, norm });
        }
        last_gap = (norm - 0.995).abs();
        if norm > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: 200,
        gap: last_gap,
    })
}

#[derive(Debug, Clone)]
pub struct FittedRewardRun {
    pub report: AlgorithmReport,
    /// `r_hat` on the full grid, `[h][s][a]`.
    pub reward_hat: Vec<f64>,
    pub fitted: FiniteMdp,
}

/// Fits each step's reward from `n` noisy queries at pairs drawn from
/// `nu_hat[h]`, plugs the fit into the known transitions, and returns the
/// exact optimal policy of the fitted model.
///
/// The fitted model's reward range is `[-M, M]` with `M = max sqrt(k(z, z))`,
/// the sup-norm bound of the RKHS unit ball.
pub fn fitted_reward<R: Rng + ?Sized>(
    gm: &mut GenerativeModel<&FiniteMdp>,
    kernel: &Kernel,
    embedding: &[Vec<f64>],
    nu_hat: &[Vec<f64>],
    n: usize,
    sampling: PairSampling,
    rng: &mut R,
) -> Result<FittedRewardRun> {
    let mdp = *gm.model();
    let (horizon, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let n_pairs = ns * na;
    if embedding.len() != n_pairs {
        return Err(Error::DimensionMismatch {
            expected: n_pairs,
            got: embedding.len(),
            context: "pair embedding",
        });
    }
    for z in embedding {
        kernel.check_point(z)?;
    }
    if nu_hat.len() != horizon {
        return Err(Error::DimensionMismatch {
            expected: horizon,
            got: nu_hat.len(),
            context: "sampling distributions per step",
        });
    }
    for (h, nu) in nu_hat.iter().enumerate() {
        if nu.len() != n_pairs {
            return Err(Error::invalid(format!("nu_hat[{h}] has {} entries, need {n_pairs}", nu.len())));
        }
        check_distribution(nu).map_err(|m| Error::invalid(format!("nu_hat[{h}] is not a distribution: {m}")))?;
    }
    if n == 0 {
        return Err(Error::invalid("fitted reward needs n >= 1 samples per step"));
    }

    let start_queries = gm.queries();
    let mut reward_hat = vec![0.0; horizon * n_pairs];
    let mut report = AlgorithmReport::new(
        "fitted-reward",
        gm.seed(),
        json!({"n": n, "sampling": sampling, "kernel": kernel.to_spec()}),
        crate::mdp::Policy::uniform(horizon, ns, na),
    );
    for h in 0..horizon {
        let pairs: Vec<usize> = match sampling {
            PairSampling::Iid => (0..n).map(|_| sample_categorical(rng, &nu_hat[h])).collect(),
            PairSampling::Enumerate => {
                let support: Vec<usize> = (0..n_pairs).filter(|&p| nu_hat[h][p] > 0.0).collect();
                (0..n).map(|i| support[i % support.len()]).collect()
            }
        };
        let mut y = DVector::zeros(n);
        for (i, &p) in pairs.iter().enumerate() {
            y[i] = gm.query(h, &(p / na), p % na).map_err(|e| e.at_step(h))?.1;
        }
        let centers: Vec<Vec<f64>> = pairs.iter().map(|&p| embedding[p].clone()).collect();
        let gram = GramMatrix::new_unchecked(kernel, &centers);
        let fit = norm_constrained_fit(gram.matrix(), &y).map_err(|e| e.at_step(h))?;
        let fitted_at_data = gram.matrix() * &fit.alpha;
        report.diagnostics.losses.push((fitted_at_data - &y).norm_squared() / n as f64);
        report.diagnostics.multipliers.push(fit.lambda);
        report.diagnostics.rkhs_norms.push(fit.norm);
        for (p, z) in embedding.iter().enumerate() {
            reward_hat[h * n_pairs + p] = centers
                .iter()
                .zip(fit.alpha.iter())
                .map(|(c, a)| a * kernel.eval_unchecked(z, c))
                .sum();
        }
    }
    let bound = embedding
        .iter()
        .map(|z| kernel.eval_unchecked(z, z).max(0.0).sqrt())
        .fold(0.0, f64::max)
        + 1e-9;
    let fitted = mdp.with_rewards(reward_hat.clone(), (-bound, bound))?;
    report.policy = solve_exact(&fitted).pistar;
    report.queries = gm.queries() - start_queries;
    Ok(FittedRewardRun {
        report,
        reward_hat,
        fitted,
    })
}

/// Reward with unit RKHS norm at every step: `r_h = sum_j c_j k(., z_j)` over
/// `atoms` distinct pairs with nonnegative `c`, scaled so `c^T K c = 1`.
/// For kernels with values in `[0, 1]` the result lies in `[0, 1]`.
pub fn unit_ball_reward<R: Rng + ?Sized>(
    rng: &mut R,
    kernel: &Kernel,
    embedding: &[Vec<f64>],
    horizon: usize,
    atoms: usize,
) -> Result<Vec<f64>> {
    let n_pairs = embedding.len();
    if atoms == 0 || atoms > n_pairs {
        return Err(Error::invalid(format!("need 1..={n_pairs} atoms, got {atoms}")));
    }
    let mut out = Vec::with_capacity(horizon * n_pairs);
    for _ in 0..horizon {
        let idx = sample(rng, n_pairs, atoms).into_vec();
        let centers: Vec<Vec<f64>> = idx.iter().map(|&i| embedding[i].clone()).collect();
        let gram = GramMatrix::new(kernel, &centers)?;
        let c = DVector::from_fn(atoms, |_, _| rng.random::<f64>());
        let norm = rkhs_norm_of(gram.matrix(), &c);
        let c = c / norm;
        for z in embedding {
            let v: f64 = centers
                .iter()
                .zip(c.iter())
                .map(|(x, w)| w * kernel.eval_unchecked(z, x))
                .sum();
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn constrained_fit_respects_the_ball() {
        let gram = DMatrix::identity(3, 3);
        let small = DVector::from_vec(vec![0.3, 0.4, 0.0]);
        let f = norm_constrained_fit(&gram, &small).unwrap();
        assert_eq!(f.lambda, 0.0);
        assert!((f.norm - 0.5).abs() < 1e-15);
        let big = DVector::from_vec(vec![3.0, 4.0, 0.0]);
        let f = norm_constrained_fit(&gram, &big).unwrap();
        assert!(f.lambda > 0.0);
        assert!((0.99..=1.0).contains(&f.norm));
    }

    #[test]
    fn unit_ball_reward_has_unit_norm() {
        let mut rng = stream(1, Stream::Instance);
        let emb: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.3, 0.0]).collect();
        let k = Kernel::gaussian(1.0, 2);
        let r = unit_ball_reward(&mut rng, &k, &emb, 2, 3).unwrap();
        assert_eq!(r.len(), 16);
        assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
        let gram = GramMatrix::new(&k, &emb).unwrap();
        let g = DVector::from_column_slice(&r[..8]);
        let norm = g.dot(&(pinv_sym(gram.matrix(), 1e-14) * &g)).sqrt();
        assert!(norm <= 1.0 + 1e-6, "{norm}");
    }
}
