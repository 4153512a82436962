use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{Spectrum, EIGEN_FLOOR};
use crate::linalg::sym_eigen_desc;

use super::distributions::DistributionSet;

const MAX_BISECTION: usize = 200;
const MULTIPLIER_TOL: f64 = 1e-8;
/// Accepted duality gap, relative to `max(1, R)`.
const GAP_TOL: f64 = 1e-6;
/// Eigenvalues of the `L^2(nu)` form below this fraction of the largest are
/// treated as exact zeros when `epsilon = 0`.
const NULL_REL_TOL: f64 = 1e-12;

/// `B_{eps,nu} = { g : ||g||_H <= 1, ||g||_{L^2(nu)} <= eps }` paired with the
/// distributions `Pi` whose worst case is measured.
#[derive(Debug, Clone)]
pub struct PerturbationInstance<'a> {
    pub spectrum: &'a Spectrum,
    pub nu: Vec<f64>,
    pub epsilon: f64,
    pub pis: &'a DistributionSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoResponse {
    pub rho_id: usize,
    pub value: f64,
    pub dual_gap: f64,
    /// Weight `t` on the `L^2(nu)` constraint in the aggregated ellipsoid.
    pub multiplier: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbationResponse {
    pub value: f64,
    /// Maximizing `g` evaluated on the support.
    pub witness: Vec<f64>,
    pub argmax_rho: usize,
    pub per_rho: Vec<RhoResponse>,
}

/// Kernel factorization reused across `nu`, `epsilon` and `rho`.
///
/// With `K = U S U^T` and `B = U S^{1/2}` (nonzero eigenvalues only), every
/// function in the span of the kernel sections is `g = B z` with
/// `||g||_H = ||z||`, so the problem becomes
/// `max b^T z` s.t. `||z|| <= 1`, `z^T A z <= eps^2`, where `b = B^T rho` and
/// `A = B^T diag(nu) B`.
#[derive(Debug, Clone)]
pub struct ResponseSolver {
    basis: DMatrix<f64>,
}

/// `A` diagonalized for one reference distribution.
#[derive(Debug, Clone)]
pub struct ReferenceForm {
    vectors: DMatrix<f64>,
    gamma: DVector<f64>,
    epsilon: f64,
}

impl ResponseSolver {
    pub fn new(gram: &DMatrix<f64>) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(Error::invalid("Gram matrix must be square"));
        }
        let (vals, vecs) = sym_eigen_desc(gram);
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Gram matrix has non-finite entries"));
        }
        let r = vals.iter().take_while(|v| **v > EIGEN_FLOOR).count();
        let basis = DMatrix::from_fn(gram.nrows(), r, |i, j| vecs[(i, j)] * vals[j].sqrt());
        Ok(ResponseSolver { basis })
    }

    pub fn from_spectrum(spec: &Spectrum) -> Result<Self> {
        Self::new(&spec.gram)
    }

    pub fn support_size(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn reference(&self, nu: &[f64], epsilon: f64) -> Result<ReferenceForm> {
        let n = self.support_size();
        if nu.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: nu.len(),
                context: "reference distribution",
            });
        }
        DistributionSet::new(n, vec![nu.to_vec()])?;
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        let weighted = DMatrix::from_fn(n, self.rank(), |i, j| nu[i] * self.basis[(i, j)]);
        let a = self.basis.transpose() * weighted;
        let (gamma, vectors) = sym_eigen_desc(&a);
        Ok(ReferenceForm {
            vectors,
            gamma: gamma.map(|g| g.max(0.0)),
            epsilon,
        })
    }

    /// Worst case of `<g, rho>` over the perturbation ball for one `rho`,
    /// with the maximizer in eigen coordinates.
    pub fn solve_rho(&self, form: &ReferenceForm, rho: &[f64]) -> Result<(f64, f64, f64, DVector<f64>)> {
        let b = self.basis.transpose() * DVector::from_column_slice(rho);
        let beta = form.vectors.transpose() * &b;
        let (value, gap, t, u) = solve_two_ellipsoids(&beta, &form.gamma, form.epsilon)?;
        Ok((value, gap, t, &form.vectors * u))
    }

    pub fn solve(&self, form: &ReferenceForm, pis: &DistributionSet) -> Result<PerturbationResponse> {
        if pis.is_empty() {
            return Err(Error::invalid("perturbation response over an empty distribution set"));
        }
        if pis.support_size() != self.support_size() {
            return Err(Error::DimensionMismatch {
                expected: self.support_size(),
                got: pis.support_size(),
                context: "distribution set support",
            });
        }
        let solved: Vec<(f64, f64, f64, DVector<f64>)> = pis
            .members()
            .par_iter()
            .map(|rho| self.solve_rho(form, rho))
            .collect::<Result<_>>()?;
        let mut best = 0;
        for (i, s) in solved.iter().enumerate() {
            if s.0 > solved[best].0 {
                best = i;
            }
        }
        let per_rho = solved
            .iter()
            .enumerate()
            .map(|(rho_id, s)| RhoResponse {
                rho_id,
                value: s.0,
                dual_gap: s.1,
                multiplier: s.2,
            })
            .collect();
        let witness = (&self.basis * &solved[best].3).iter().copied().collect();
        Ok(PerturbationResponse {
            value: solved[best].0,
            witness,
            argmax_rho: best,
            per_rho,
        })
    }
}

/// `max beta^T u` s.t. `||u|| <= 1`, `sum gamma_j u_j^2 <= eps^2`, in the
/// eigenbasis of `A`.
///
/// For `t` in `[0, 1]` the intersection lies inside the ellipsoid
/// `u^T ((1 - t) I + t A / eps^2) u <= 1`, whose support value is
/// `phi(t) = sqrt(sum beta_j^2 / ((1 - t) + t gamma_j / eps^2))`. `phi^2` is
/// convex in `t`; its minimizer equals the primal optimum, so we bisect on
/// the sign of its derivative. The returned gap is `phi(t)` minus the value
/// of the witness scaled back into the feasible set.
fn solve_two_ellipsoids(beta: &DVector<f64>, gamma: &DVector<f64>, eps: f64) -> Result<(f64, f64, f64, DVector<f64>)> {
    let r = beta.len();
    if r == 0 || beta.norm() == 0.0 {
        return Ok((0.0, 0.0, 0.0, DVector::zeros(r)));
    }
    let gmax = gamma.max();
    if eps == 0.0 {
        // Only the null space of A is feasible.
        let cut = NULL_REL_TOL * gmax.max(f64::MIN_POSITIVE);
        let proj = DVector::from_fn(r, |j, _| if gamma[j] <= cut { beta[j] } else { 0.0 });
        let v = proj.norm();
        if v == 0.0 {
            return Ok((0.0, 0.0, 1.0, DVector::zeros(r)));
        }
        return Ok((v, 0.0, 1.0, proj / v));
    }
    let w: Vec<f64> = gamma.iter().map(|g| g / (eps * eps)).collect();
    let denom = |t: f64, j: usize| (1.0 - t) + t * w[j];
    let dphi2 = |t: f64| -> f64 {
        (0..r)
            .map(|j| {
                let d = denom(t, j);
                -beta[j] * beta[j] * (w[j] - 1.0) / (d * d)
            })
            .sum()
    };
    let t = if dphi2(0.0) >= 0.0 {
        0.0
    } else {
        let end_finite = (0..r).all(|j| w[j] > 0.0 || beta[j] == 0.0);
        if end_finite && dphi2(1.0) <= 0.0 {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            let mut iterations = 0;
            while hi - lo > MULTIPLIER_TOL * 1e-6 && iterations < MAX_BISECTION {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if dphi2(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                iterations += 1;
            }
            if hi - lo > MULTIPLIER_TOL {
                let t = 0.5 * (lo + hi);
                let (phi, primal) = evaluate(beta, &w, eps, t, gamma);
                return Err(Error::NoConvergence {
                    iterations,
                    gap: phi - primal.0,
                });
            }
            0.5 * (lo + hi)
        }
    };
    let (phi, (primal, u)) = evaluate(beta, &w, eps, t, gamma);
    let gap = (phi - primal).max(0.0);
    if gap > GAP_TOL * phi.max(1.0) {
        return Err(Error::NoConvergence {
            iterations: MAX_BISECTION,
            gap,
        });
    }
    Ok((primal, gap, t, u))
}

/// Dual value `phi(t)` and the feasible primal witness derived from it.
fn evaluate(beta: &DVector<f64>, w: &[f64], eps: f64, t: f64, gamma: &DVector<f64>) -> (f64, (f64, DVector<f64>)) {
    let r = beta.len();
    let m: Vec<f64> = (0..r).map(|j| (1.0 - t) + t * w[j]).collect();
    let phi2: f64 = (0..r)
        .filter(|&j| beta[j] != 0.0)
        .map(|j| beta[j] * beta[j] / m[j])
        .sum();
    let phi = phi2.sqrt();
    let u = DVector::from_fn(r, |j, _| if beta[j] == 0.0 { 0.0 } else { beta[j] / (m[j] * phi) });
    let norm = u.norm();
    let l2 = (0..r).map(|j| gamma[j] * u[j] * u[j]).sum::<f64>().sqrt();
    let mut scale = 1.0f64;
    if norm > 1.0 {
        scale = scale.min(1.0 / norm);
    }
    if l2 > eps {
        scale = scale.min(eps / l2);
    }
    let u = u * scale;
    let primal = beta.dot(&u);
    (phi, (primal, u))
}

/// `R = max_{rho in Pi} sup { |<g, rho>| : g in B_{eps,nu} }`.
pub fn perturbation_response(inst: &PerturbationInstance<'_>) -> Result<PerturbationResponse> {
    let solver = ResponseSolver::from_spectrum(inst.spectrum)?;
    let form = solver.reference(&inst.nu, inst.epsilon)?;
    solver.solve(&form, inst.pis)
}

/// `max_{rho in Pi} sqrt(rho^T K rho)`, the response with no `L^2` constraint.
pub fn dual_norm_bound(gram: &DMatrix<f64>, pis: &DistributionSet) -> f64 {
    pis.members()
        .iter()
        .map(|rho| {
            let r = DVector::from_column_slice(rho);
            (r.transpose() * gram * &r)[(0, 0)].max(0.0).sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct DeltaComplexity {
    /// Smallest response over the candidates; an upper bound on the infimum
    /// over all reference distributions.
    pub upper_bound: f64,
    pub argmin: usize,
    pub nu: Vec<f64>,
    pub per_candidate: Vec<PerturbationResponse>,
}

const MIXTURE_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.75];

/// Uniform, every member of `Pi`, and the 1/4, 1/2, 3/4 mixtures of every pair drawn from those.
pub fn default_candidates(pis: &DistributionSet) -> Vec<Vec<f64>> {
    let n = pis.support_size();
    let mut base = vec![vec![1.0 / n as f64; n]];
    base.extend(pis.members().iter().cloned());
    let mut out = base.clone();
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            for w in MIXTURE_WEIGHTS {
                out.push(base[i].iter().zip(&base[j]).map(|(a, b)| w * a + (1.0 - w) * b).collect());
            }
        }
    }
    out
}

/// Candidate search for `min_nu R(nu, eps)`.
pub fn delta_complexity(
    spectrum: &Spectrum,
    pis: &DistributionSet,
    epsilon: f64,
    candidates: Option<&[Vec<f64>]>,
) -> Result<DeltaComplexity> {
    let defaults;
    let candidates = match candidates {
        Some(c) => c,
        None => {
            defaults = default_candidates(pis);
            &defaults
        }
    };
    if candidates.is_empty() {
        return Err(Error::invalid("delta complexity needs at least one candidate"));
    }
    let solver = ResponseSolver::from_spectrum(spectrum)?;
    let mut per_candidate = Vec::with_capacity(candidates.len());
    for nu in candidates {
        let form = solver.reference(nu, epsilon)?;
        per_candidate.push(solver.solve(&form, pis)?);
    }
    let mut argmin = 0;
    for (i, r) in per_candidate.iter().enumerate() {
        if r.value < per_candidate[argmin].value {
            argmin = i;
        }
    }
    Ok(DeltaComplexity {
        upper_bound: per_candidate[argmin].value,
        argmin,
        nu: candidates[argmin].clone(),
        per_candidate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseRow {
    pub epsilon: f64,
    pub nu_id: usize,
    pub rho_id: usize,
    pub response: f64,
    pub dual_gap: f64,
}

impl ResponseRow {
    pub fn from_response(epsilon: f64, nu_id: usize, resp: &PerturbationResponse) -> Vec<ResponseRow> {
        resp.per_rho
            .iter()
            .map(|r| ResponseRow {
                epsilon,
                nu_id,
                rho_id: r.rho_id,
                response: r.value,
                dual_gap: r.dual_gap,
            })
            .collect()
    }
}

pub fn write_response_csv<W: Write>(out: W, rows: &[ResponseRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
