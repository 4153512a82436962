use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::PINV_RELATIVE_CUTOFF;
use crate::mdp::{apply_bellman, FiniteMdp};

use super::features::FeatureMap;

/// Least-squares projector onto the span of the feature columns.
#[derive(Debug, Clone)]
pub struct FeatureProjector {
    design: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl FeatureProjector {
    pub fn new(features: &FeatureMap) -> Self {
        let design = features.design_matrix();
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let eps = (PINV_RELATIVE_CUTOFF * smax).max(f64::MIN_POSITIVE);
        let pinv = svd.pseudo_inverse(eps).expect("svd computed with u and v");
        FeatureProjector { design, pinv }
    }

    /// Minimum-norm least-squares weights and the max-abs fit residual for
    /// a function given on the `s * |A| + a` grid.
    pub fn fit(&self, values: &[f64]) -> (DVector<f64>, f64) {
        let y = DVector::from_column_slice(values);
        let w = &self.pinv * &y;
        let residual = (&self.design * &w - y).amax();
        (w, residual)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    pub max_residual: f64,
    /// Largest `||omega|| / (||f||_inf + 1)` seen.
    pub constant: f64,
    pub trials: usize,
}

impl ClosureReport {
    pub fn is_closed(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

/// Samples `trials` functions `f: S -> [-1, 1]` and fits `T_h f` by
/// `phi^T omega` at every step.
///
/// A residual below tolerance is evidence of closure, not proof; a large
/// residual is a conclusive counterexample.
pub fn check_linear_closure<R: Rng + ?Sized>(
    mdp: &FiniteMdp,
    features: &FeatureMap,
    trials: usize,
    rng: &mut R,
) -> Result<ClosureReport> {
    if features.n_states() != mdp.n_states() || features.n_actions() != mdp.n_actions() {
        return Err(Error::invalid("feature grid does not match the MDP"));
    }
    let proj = FeatureProjector::new(features);
    let mut report = ClosureReport {
        max_residual: 0.0,
        constant: 0.0,
        trials,
    };
    for _ in 0..trials {
        let f: Vec<f64> = (0..mdp.n_states()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for h in 0..mdp.horizon() {
            let tf = apply_bellman(mdp, h, &f)?;
            let (w, res) = proj.fit(&tf);
            report.max_residual = report.max_residual.max(res);
            report.constant = report.constant.max(w.norm() / (sup + 1.0));
        }
    }
    Ok(report)
}
