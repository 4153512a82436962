//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rlfa_core::mdp::FiniteMdp;

/// Value of a deterministic policy by forward propagation of the state law.
pub fn forward_value(mdp: &FiniteMdp, choice: &[usize]) -> f64 {
    let ns = mdp.n_states();
    let mut law = mdp.initial().to_vec();
    let mut j = 0.0;
    for h in 0..mdp.horizon() {
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let a = choice[h * ns + s];
            j += law[s] * mdp.reward(h, s, a);
            for (t, p) in mdp.transition_row(h, s, a).iter().enumerate() {
                next[t] += law[s] * p;
            }
        }
        law = next;
    }
    j
}

/// Best value over all `|A|^{|S| H}` deterministic policies.
pub fn brute_force_jstar(mdp: &FiniteMdp) -> f64 {
    let (ns, na, h) = (mdp.n_states(), mdp.n_actions(), mdp.horizon());
    let slots = ns * h;
    let total = na.pow(slots as u32);
    let mut best = f64::NEG_INFINITY;
    let mut choice = vec![0usize; slots];
    for code in 0..total {
        let mut c = code;
        for slot in choice.iter_mut() {
            *slot = c % na;
            c /= na;
        }
        best = best.max(forward_value(mdp, &choice));
    }
    best
}

/// Lawson-Hanson nonnegative least squares: `min ||A x - b||`, `x >= 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12;
    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
            let z_sub = sub.clone().svd(true, true).solve(b, 1e-14).expect("svd solve");
            if z_sub.iter().all(|v| *v > 0.0) {
                for (c, &k) in idx.iter().enumerate() {
                    x[k] = z_sub[c];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (c, &k) in idx.iter().enumerate() {
                if z_sub[c] <= 0.0 {
                    alpha = alpha.min(x[k] / (x[k] - z_sub[c]));
                }
            }
            for (c, &k) in idx.iter().enumerate() {
                x[k] += alpha * (z_sub[c] - x[k]);
                if x[k] <= tol {
                    x[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
    x
}

/// Residual of the best convex combination of `vertices` matching `point`.
pub fn hull_residual(vertices: &[Vec<f64>], point: &[f64]) -> f64 {
    let dim = point.len();
    let weight = 1e3;
    let a = DMatrix::from_fn(dim + 1, vertices.len(), |r, c| {
        if r < dim {
            vertices[c][r]
        } else {
            weight
        }
    });
    let mut b = DVector::zeros(dim + 1);
    for r in 0..dim {
        b[r] = point[r];
    }
    b[dim] = weight;
    let x = nnls(&a, &b);
    let fit = DMatrix::from_fn(dim, vertices.len(), |r, c| vertices[c][r]) * &x;
    let mass_err = (x.sum() - 1.0).abs();
    (0..dim).map(|r| (fit[r] - point[r]).abs()).fold(mass_err, f64::max)
}

/// Projection of `y` onto `{u : sum gamma_j u_j^2 <= eps^2}`.
fn project_ellipsoid(y: &DVector<f64>, gamma: &[f64], eps: f64) -> DVector<f64> {
    let q = |mu: f64| -> f64 {
        (0..y.len())
            .map(|j| gamma[j] * (y[j] / (1.0 + mu * gamma[j])).powi(2))
            .sum()
    };
    if q(0.0) <= eps * eps {
        return y.clone();
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while q(hi) > eps * eps {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q(mid) > eps * eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    DVector::from_fn(y.len(), |j, _| y[j] / (1.0 + hi * gamma[j]))
}

fn project_ball(y: &DVector<f64>) -> DVector<f64> {
    let n = y.norm();
    if n > 1.0 {
        y / n
    } else {
        y.clone()
    }
}

/// Dykstra projection onto the intersection of the unit ball and the ellipsoid.
fn project_intersection(y: &DVector<f64>, gamma: &[f64], eps: f64) -> DVector<f64> {
    let mut x = y.clone();
    let mut p = DVector::zeros(y.len());
    let mut q = DVector::zeros(y.len());
    for _ in 0..300 {
        let z = project_ball(&(&x + &p));
        p = &x + &p - &z;
        let x_new = project_ellipsoid(&(&z + &q), gamma, eps);
        q = &z + &q - &x_new;
        let moved = (&x_new - &x).norm();
        x = x_new;
        if moved < 1e-13 {
            break;
        }
    }
    x
}

/// Brute-force `max rho^T g` over `||g||_H <= 1`, `||g||_{L^2(nu)} <= eps`
/// by projected ascent from random starts.
pub fn response_oracle<R: Rng>(
    gram: &DMatrix<f64>,
    nu: &[f64],
    eps: f64,
    rho: &[f64],
    restarts: usize,
    rng: &mut R,
) -> f64 {
    let n = gram.nrows();
    let eig = SymmetricEigen::new(gram.clone());
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 1e-12).collect();
    let basis = DMatrix::from_fn(n, keep.len(), |i, c| {
        eig.eigenvectors[(i, keep[c])] * eig.eigenvalues[keep[c]].sqrt()
    });
    let a = basis.transpose() * DMatrix::from_diagonal(&DVector::from_column_slice(nu)) * &basis;
    let ea = SymmetricEigen::new(a);
    let gamma: Vec<f64> = ea.eigenvalues.iter().map(|g| g.max(0.0)).collect();
    let beta = ea.eigenvectors.transpose() * (basis.transpose() * DVector::from_column_slice(rho));
    let r = beta.len();
    if beta.norm() == 0.0 {
        return 0.0;
    }
    let dir = &beta / beta.norm();
    let mut best = 0.0f64;
    for _ in 0..restarts {
        let start = DVector::from_fn(r, |_, _| rng.random::<f64>() - 0.5);
        let mut u = project_intersection(&start, &gamma, eps);
        let mut step = 0.5;
        for it in 0..2000 {
            let next = project_intersection(&(&u + &dir * step), &gamma, eps);
            let moved = (&next - &u).norm();
            u = next;
            if it % 200 == 199 {
                step *= 0.5;
            }
            if moved < 1e-12 {
                break;
            }
        }
        best = best.max(beta.dot(&u));
    }
    best
}

/// Every point of `{k / res : sum = 1}` on `n` atoms.
pub fn simplex_grid(n: usize, res: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, res: usize, cur: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
        if cur.len() + 1 == n {
            cur.push(left as f64 / res as f64);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k as f64 / res as f64);
            rec(n, left - k, res, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, res, res, &mut Vec::new(), &mut out);
    out
}

/// Smallest resolution whose simplex grid on `n` atoms has at least `points` entries.
pub fn grid_resolution(n: usize, points: usize) -> usize {
    (1..).find(|&k| simplex_grid(n, k).len() >= points).unwrap()
}

/// Conjugate-gradient solution of `M x = y` for symmetric positive definite `M`.
pub fn conjugate_gradient(m: &DMatrix<f64>, y: &DVector<f64>, tol: f64) -> DVector<f64> {
    let mut x = DVector::zeros(y.len());
    let mut r = y.clone();
    let mut p = r.clone();
    let mut rs = r.dot(&r);
    for _ in 0..10 * y.len() + 100 {
        if rs.sqrt() < tol {
            break;
        }
        let mp = m * &p;
        let alpha = rs / p.dot(&mp);
        x += &p * alpha;
        r -= &mp * alpha;
        let rs_new = r.dot(&r);
        p = &r + &p * (rs_new / rs);
        rs = rs_new;
    }
    x
}

/// Ordinary least-squares slope of `log y` on `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
