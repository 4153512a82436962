use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{krr_solve, GramMatrix, Kernel};
use crate::linear::{FeatureMap, RidgeDesign};

/// Regression class used for the per-step fits of the value-based algorithms.
#[derive(Debug, Clone)]
pub enum FunctionClass {
    /// Ridge regression on `phi(s, a)`.
    Linear { features: FeatureMap, lambda: f64 },
    /// Kernel ridge regression on an embedding `z(s, a)`, indexed `s * |A| + a`.
    Kernel {
        kernel: Kernel,
        embedding: Vec<Vec<f64>>,
        n_actions: usize,
        lambda: f64,
    },
}

/// A fitted step function tabulated on the `(s, a)` grid.
#[derive(Debug, Clone)]
pub struct StepFit {
    /// Unclipped predictions, `s * |A| + a` order.
    pub values: Vec<f64>,
    /// Mean squared training residual.
    pub loss: f64,
}

impl FunctionClass {
    pub fn n_pairs(&self) -> usize {
        match self {
            FunctionClass::Linear { features, .. } => features.n_states() * features.n_actions(),
            FunctionClass::Kernel { embedding, .. } => embedding.len(),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            FunctionClass::Linear { features, .. } => features.n_actions(),
            FunctionClass::Kernel { n_actions, .. } => *n_actions,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            FunctionClass::Linear { lambda, .. } | FunctionClass::Kernel { lambda, .. } => *lambda,
        }
    }

    pub fn check(&self, n_states: usize, n_actions: usize) -> Result<()> {
        if self.n_pairs() != n_states * n_actions || self.n_actions() != n_actions {
            return Err(Error::invalid(format!(
                "function class covers {} pairs, MDP has {n_states} x {n_actions}",
                self.n_pairs()
            )));
        }
        if let FunctionClass::Kernel { kernel, embedding, .. } = self {
            for z in embedding {
                kernel.check_point(z)?;
            }
        }
        Ok(())
    }

    /// Regularized least squares on `(pair index, target)` data.
    pub fn fit(&self, pairs: &[usize], targets: &[f64]) -> Result<StepFit> {
        if pairs.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: pairs.len(),
                got: targets.len(),
                context: "regression targets",
            });
        }
        let values = match self {
            FunctionClass::Linear { features, lambda } => {
                let na = features.n_actions();
                let mut design = RidgeDesign::new(features.dim(), *lambda);
                for (&p, &y) in pairs.iter().zip(targets) {
                    design.push(features.phi_slice(p / na, p % na), y);
                }
                let w = design.fit()?;
                (0..self.n_pairs())
                    .map(|p| features.phi(p / na, p % na).dot(&w))
                    .collect::<Vec<_>>()
            }
            FunctionClass::Kernel {
                kernel,
                embedding,
                lambda,
                ..
            } => {
                let centers: Vec<Vec<f64>> = pairs.iter().map(|&p| embedding[p].clone()).collect();
                let gram = GramMatrix::new_unchecked(kernel, &centers);
                let alpha = krr_solve(gram.matrix(), &DVector::from_column_slice(targets), *lambda)?;
                embedding
                    .iter()
                    .map(|z| {
                        centers
                            .iter()
                            .zip(alpha.iter())
                            .map(|(c, a)| a * kernel.eval_unchecked(z, c))
                            .sum()
                    })
                    .collect()
            }
        };
        let loss = if pairs.is_empty() {
            0.0
        } else {
            pairs
                .iter()
                .zip(targets)
                .map(|(&p, &y)| (values[p] - y).powi(2))
                .sum::<f64>()
                / pairs.len() as f64
        };
        Ok(StepFit { values, loss })
    }
}

/// `n` pairs per step drawn i.i.d. uniformly from `S x A`, as flat pair indices.
pub fn uniform_pairs<R: Rng + ?Sized>(rng: &mut R, horizon: usize, n_pairs: usize, n: usize) -> Vec<Vec<usize>> {
    (0..horizon)
        .map(|_| (0..n).map(|_| rng.random_range(0..n_pairs)).collect())
        .collect()
}

/// Every pair once per step.
pub fn all_pairs(horizon: usize, n_pairs: usize) -> Vec<Vec<usize>> {
    (0..horizon).map(|_| (0..n_pairs).collect()).collect()
}
