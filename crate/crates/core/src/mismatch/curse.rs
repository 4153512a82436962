use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::rng::{unit_sphere, StreamRng};
use crate::simulator::Dynamics;

/// Point on `S^{d-1}` from `d - 1` hyperspherical angles.
///
/// `x_0 = cos p_0`, `x_i = sin p_0 ... sin p_{i-1} cos p_i`, and the last
/// coordinate is the full product of sines. Any real angles map onto the
/// sphere, so wrapped angles outside the usual ranges remain valid.
pub fn to_cartesian(angles: &[f64]) -> Vec<f64> {
    let d = angles.len() + 1;
    let mut x = Vec::with_capacity(d);
    let mut prod = 1.0;
    for &p in angles {
        x.push(prod * p.cos());
        prod *= p.sin();
    }
    x.push(prod);
    x
}

/// Inverse of [`to_cartesian`] on the canonical ranges
/// (`[0, pi]` for all but the last angle, `[0, 2 pi)` for the last).
pub fn from_cartesian(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut angles = Vec::with_capacity(d.saturating_sub(1));
    for i in 0..d.saturating_sub(1) {
        let rest: f64 = x[i + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if i + 2 == d {
            angles.push(x[i + 1].atan2(x[i]).rem_euclid(TAU));
        } else {
            angles.push(rest.atan2(x[i]));
        }
    }
    angles
}

/// `r(x) = sum_j c_j exp(-||x - x_j||)` with `c^T K c = 1`.
#[derive(Debug, Clone)]
pub struct LaplacianExpansion {
    pub centers: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    kernel: Kernel,
}

impl LaplacianExpansion {
    pub fn new(centers: Vec<Vec<f64>>, coefficients: Vec<f64>) -> Result<Self> {
        let dim = centers.first().map(Vec::len).ok_or_else(|| Error::invalid("expansion needs centers"))?;
        if coefficients.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: coefficients.len(),
                context: "expansion coefficients",
            });
        }
        let kernel = Kernel::laplacian(1.0, dim);
        for c in &centers {
            kernel.check_point(c)?;
        }
        Ok(LaplacianExpansion {
            centers,
            coefficients,
            kernel,
        })
    }

    /// Nonnegative random weights on `m` uniform sphere centers, scaled to unit
    /// norm. Values then lie in `[0, 1]`.
    pub fn random(rng: &mut StreamRng, dim: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("expansion needs at least one center"));
        }
        let centers: Vec<Vec<f64>> = (0..m).map(|_| unit_sphere(rng, dim)).collect();
        let coefficients: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let mut e = Self::new(centers, coefficients)?;
        let norm = e.rkhs_norm();
        if norm <= 0.0 {
            return Err(Error::invalid("degenerate random expansion"));
        }
        e.coefficients.iter_mut().for_each(|c| *c /= norm);
        Ok(e)
    }

    pub fn rkhs_norm(&self) -> f64 {
        let mut acc = 0.0;
        for (ci, xi) in self.coefficients.iter().zip(&self.centers) {
            for (cj, xj) in self.coefficients.iter().zip(&self.centers) {
                acc += ci * cj * self.kernel.eval_unchecked(xi, xj);
            }
        }
        acc.max(0.0).sqrt()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(&self.centers)
            .map(|(c, xj)| c * self.kernel.eval_unchecked(x, xj))
            .sum()
    }
}

/// Deterministic MDP on `S^{d-1}` with two actions: at step `h`, action 0
/// adds `delta` to angle `h mod (d - 1)` and action 1 subtracts it. Angles
/// wrap modulo `2 pi`. Rewards depend on the state only.
#[derive(Debug, Clone)]
pub struct CurseMdp {
    dim: usize,
    delta: f64,
    rewards: Vec<LaplacianExpansion>,
}

impl CurseMdp {
    pub fn new(dim: usize, delta: f64, rewards: Vec<LaplacianExpansion>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("sphere dimension must be >= 2, got {dim}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be finite and >= 0, got {delta}")));
        }
        if rewards.is_empty() {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        for r in &rewards {
            if r.centers[0].len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.centers[0].len(),
                    context: "reward centers",
                });
            }
            if r.rkhs_norm() > 1.0 + 1e-9 {
                return Err(Error::invalid("reward RKHS norm exceeds 1"));
            }
        }
        Ok(CurseMdp { dim, delta, rewards })
    }

    /// Random unit-norm Laplacian rewards with `centers` atoms per step.
    pub fn random(rng: &mut StreamRng, dim: usize, horizon: usize, delta: f64, centers: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("sphere dimension must be >= 2, got {dim}")));
        }
        let rewards = (0..horizon)
            .map(|_| LaplacianExpansion::random(rng, dim, centers))
            .collect::<Result<_>>()?;
        Self::new(dim, delta, rewards)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rewards(&self) -> &[LaplacianExpansion] {
        &self.rewards
    }

    pub fn angle_index(&self, h: usize) -> usize {
        h % (self.dim - 1)
    }

    pub fn reward(&self, h: usize, angles: &[f64]) -> f64 {
        self.rewards[h].eval(&to_cartesian(angles))
    }

    pub fn next_state(&self, h: usize, angles: &[f64], a: usize) -> Vec<f64> {
        let mut next = angles.to_vec();
        let i = self.angle_index(h);
        let step = if a == 0 { self.delta } else { -self.delta };
        next[i] = (next[i] + step).rem_euclid(TAU);
        next
    }

    /// Exact expected return from `start` when `prob0(h, s)` is the
    /// probability of action 0, summing over all `2^H` action sequences.
    pub fn expected_return<F: Fn(usize, &[f64]) -> f64>(&self, start: &[f64], prob0: &F) -> f64 {
        fn go<F: Fn(usize, &[f64]) -> f64>(m: &CurseMdp, h: usize, s: &[f64], prob0: &F) -> f64 {
            if h == m.rewards.len() {
                return 0.0;
            }
            let p = prob0(h, s).clamp(0.0, 1.0);
            let r = m.reward(h, s);
            let mut v = r;
            if p > 0.0 {
                v += p * go(m, h + 1, &m.next_state(h, s, 0), prob0);
            }
            if p < 1.0 {
                v += (1.0 - p) * go(m, h + 1, &m.next_state(h, s, 1), prob0);
            }
            v
        }
        go(self, 0, start, prob0)
    }
}

impl Dynamics for CurseMdp {
    type State = Vec<f64>;

    fn horizon(&self) -> usize {
        self.rewards.len()
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn check(&self, h: usize, s: &Vec<f64>, a: usize) -> Result<()> {
        if h >= self.rewards.len() {
            return Err(Error::invalid(format!("step {h} outside 0..{}", self.rewards.len())));
        }
        if a >= 2 {
            return Err(Error::invalid(format!("action {a} outside 0..2")));
        }
        self.check_state(s)
    }

    fn sample_initial(&self, rng: &mut StreamRng) -> Vec<f64> {
        from_cartesian(&unit_sphere(rng, self.dim))
    }

    fn transition(&self, h: usize, s: &Vec<f64>, a: usize, _rng: &mut StreamRng) -> (Vec<f64>, f64) {
        (self.next_state(h, s, a), self.reward(h, s))
    }

    fn check_state(&self, s: &Vec<f64>) -> Result<()> {
        if s.len() != self.dim - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dim - 1,
                got: s.len(),
                context: "spherical angles",
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("angles must be finite"));
        }
        Ok(())
    }

    fn state_label(&self, s: &Vec<f64>) -> String {
        s.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";")
    }
}
