use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::unit_sphere;

/// Tolerance on `||x|| = 1` for kernels defined on the sphere.
pub const SPHERE_TOL: f64 = 1e-8;

/// Positive-semidefinite kernels on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `exp(-alpha ||x - x'||^2)`
    Gaussian { alpha: f64, dim: usize },
    /// `exp(-alpha ||x - x'||)`
    Laplacian { alpha: f64, dim: usize },
    /// Two-layer ReLU tangent kernel with first-layer weights `N(0, I/d)`.
    Ntk { dim: usize },
    /// `E_{omega ~ U(S^{d-1})}[relu(omega^T x) relu(omega^T x')]`, closed form
    /// when `directions` is `None`, otherwise the empirical mean over the
    /// rows of `directions`.
    RandomFeature {
        dim: usize,
        directions: Option<Arc<DMatrix<f64>>>,
    },
}

/// `(sin t + (pi - t) cos t) / (2 pi)` with `t = arccos(u)`: the first-order
/// arc-cosine kernel `E_g[relu(g^T x) relu(g^T x')]`, `g ~ N(0, I)`, for unit `x, x'`.
fn arccos1(u: f64) -> f64 {
    let u = u.clamp(-1.0, 1.0);
    let t = u.acos();
    ((1.0 - u * u).sqrt() + (PI - t) * u) / (2.0 * PI)
}

/// `P(g^T x > 0, g^T x' > 0) = (pi - t) / (2 pi)`.
fn arccos0(u: f64) -> f64 {
    let u = u.clamp(-1.0, 1.0);
    (PI - u.acos()) / (2.0 * PI)
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

impl Kernel {
    pub fn gaussian(alpha: f64, dim: usize) -> Self {
        Kernel::Gaussian { alpha, dim }
    }

    pub fn laplacian(alpha: f64, dim: usize) -> Self {
        Kernel::Laplacian { alpha, dim }
    }

    pub fn ntk(dim: usize) -> Self {
        Kernel::Ntk { dim }
    }

    pub fn random_feature(dim: usize) -> Self {
        Kernel::RandomFeature { dim, directions: None }
    }

    /// Random-feature kernel estimated from `samples` uniform directions.
    pub fn random_feature_mc<R: Rng + ?Sized>(dim: usize, samples: usize, rng: &mut R) -> Self {
        let mut m = DMatrix::zeros(samples, dim);
        for i in 0..samples {
            for (j, v) in unit_sphere(rng, dim).into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Kernel::RandomFeature {
            dim,
            directions: Some(Arc::new(m)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Kernel::Gaussian { dim, .. }
            | Kernel::Laplacian { dim, .. }
            | Kernel::Ntk { dim }
            | Kernel::RandomFeature { dim, .. } => *dim,
        }
    }

    pub fn requires_sphere(&self) -> bool {
        matches!(self, Kernel::Ntk { .. } | Kernel::RandomFeature { .. })
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
                context: "kernel input",
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("kernel input must be finite"));
        }
        if self.requires_sphere() {
            let n = dot(x, x).sqrt();
            if (n - 1.0).abs() > SPHERE_TOL {
                return Err(Error::invalid(format!("kernel input must lie on the unit sphere, ||x|| = {n}")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.eval_unchecked(x, y))
    }

    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Gaussian { alpha, .. } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-alpha * d2).exp()
            }
            Kernel::Laplacian { alpha, .. } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-alpha * d2.sqrt()).exp()
            }
            Kernel::Ntk { dim } => {
                let u = dot(x, y);
                u * arccos0(u) + arccos1(u) / *dim as f64
            }
            Kernel::RandomFeature { dim, directions } => match directions {
                None => arccos1(dot(x, y)) / *dim as f64,
                Some(w) => {
                    let m = w.nrows();
                    let mut acc = 0.0;
                    for i in 0..m {
                        let row = w.row(i);
                        let a: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum();
                        let b: f64 = row.iter().zip(y).map(|(p, q)| p * q).sum();
                        acc += relu(a) * relu(b);
                    }
                    acc / m as f64
                }
            },
        }
    }

    pub fn to_spec(&self) -> KernelSpec {
        match self {
            Kernel::Gaussian { alpha, dim } => KernelSpec {
                kind: KernelKind::Gaussian,
                alpha: Some(*alpha),
                d: *dim,
                mc_samples: None,
            },
            Kernel::Laplacian { alpha, dim } => KernelSpec {
                kind: KernelKind::Laplacian,
                alpha: Some(*alpha),
                d: *dim,
                mc_samples: None,
            },
            Kernel::Ntk { dim } => KernelSpec {
                kind: KernelKind::Ntk,
                alpha: None,
                d: *dim,
                mc_samples: None,
            },
            Kernel::RandomFeature { dim, directions } => KernelSpec {
                kind: KernelKind::RandomFeature,
                alpha: None,
                d: *dim,
                mc_samples: directions.as_ref().map(|w| w.nrows()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Gaussian,
    Laplacian,
    Ntk,
    RandomFeature,
}

/// JSON form: `{kind, alpha?, d, mc_samples?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub kind: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
}

impl KernelSpec {
    /// Resolves the spec; `rng` supplies directions when `mc_samples` is set.
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Kernel> {
        if self.d == 0 {
            return Err(Error::invalid("kernel dimension d must be positive"));
        }
        let alpha = || match self.alpha {
            Some(a) if a > 0.0 && a.is_finite() => Ok(a),
            Some(a) => Err(Error::invalid(format!("kernel alpha must be positive, got {a}"))),
            None => Err(Error::invalid("gaussian/laplacian kernels need `alpha`")),
        };
        if self.mc_samples.is_some() && self.kind != KernelKind::RandomFeature {
            return Err(Error::invalid("`mc_samples` applies only to random-feature kernels"));
        }
        Ok(match self.kind {
            KernelKind::Gaussian => Kernel::gaussian(alpha()?, self.d),
            KernelKind::Laplacian => Kernel::laplacian(alpha()?, self.d),
            KernelKind::Ntk => Kernel::ntk(self.d),
            KernelKind::RandomFeature => match self.mc_samples {
                None => Kernel::random_feature(self.d),
                Some(0) => return Err(Error::invalid("mc_samples must be positive")),
                Some(m) => Kernel::random_feature_mc(self.d, m, rng),
            },
        })
    }
}
