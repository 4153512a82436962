use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{condition_estimate, spd_solve};

/// Accumulated ridge-regression design `Lambda = X^T X + n lambda I`.
///
/// By default `n` is the number of rows pushed so far. A fixed `n` (the
/// declared sample budget) can be set with [`RidgeDesign::with_regularizer_count`].
#[derive(Debug, Clone)]
pub struct RidgeDesign {
    dim: usize,
    lambda: f64,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    count: usize,
    regularizer_count: Option<usize>,
}

impl RidgeDesign {
    pub fn new(dim: usize, lambda: f64) -> Self {
        RidgeDesign {
            dim,
            lambda,
            gram: DMatrix::zeros(dim, dim),
            xty: DVector::zeros(dim),
            count: 0,
            regularizer_count: None,
        }
    }

    pub fn with_regularizer_count(mut self, n: usize) -> Self {
        self.regularizer_count = Some(n);
        self
    }

    pub fn from_rows(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
                context: "ridge targets",
            });
        }
        let mut d = Self::new(x.ncols(), lambda);
        d.gram = x.transpose() * x;
        d.xty = x.transpose() * y;
        d.count = x.nrows();
        Ok(d)
    }

    pub fn push(&mut self, phi: &[f64], y: f64) {
        debug_assert_eq!(phi.len(), self.dim);
        let v = DVector::from_column_slice(phi);
        self.gram.ger(1.0, &v, &v, 1.0);
        self.xty.axpy(y, &v, 1.0);
        self.count += 1;
    }

    /// Adds a feature row to the Gram part only (targets handled elsewhere).
    pub fn push_features(&mut self, phi: &[f64]) {
        let v = DVector::from_column_slice(phi);
        self.gram.ger(1.0, &v, &v, 1.0);
        self.count += 1;
    }

    pub fn set_xty(&mut self, xty: DVector<f64>) {
        self.xty = xty;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn regularizer_scale(&self) -> usize {
        self.regularizer_count.unwrap_or(self.count)
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    /// `X^T X + n lambda I`.
    pub fn lambda_matrix(&self) -> DMatrix<f64> {
        let shift = self.regularizer_scale() as f64 * self.lambda;
        &self.gram + DMatrix::identity(self.dim, self.dim) * shift
    }

    /// Minimizer of `(1/n) sum (y_i - phi_i^T w)^2 + lambda ||w||^2`.
    pub fn fit(&self) -> Result<DVector<f64>> {
        if self.lambda < 0.0 || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("ridge lambda must be >= 0, got {}", self.lambda)));
        }
        if self.count == 0 && self.lambda > 0.0 {
            return Ok(DVector::zeros(self.dim));
        }
        let m = self.lambda_matrix();
        spd_solve(&m, &self.xty, "ridge normal equations").map_err(|_| Error::Singular {
            condition: condition_estimate(&m),
            context: "ridge normal equations".into(),
        })
    }
}

pub fn ridge_fit(design: &RidgeDesign) -> Result<DVector<f64>> {
    design.fit()
}

/// Ridge solution from explicit rows, solving whichever of the primal
/// (`d x d`) or dual (`n x n`) systems is smaller.
pub fn ridge_solve(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let (n, d) = (x.nrows(), x.ncols());
    if n != y.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
            context: "ridge targets",
        });
    }
    if d <= n || lambda <= 0.0 {
        return RidgeDesign::from_rows(x, y, lambda)?.fit();
    }
    let mut k = x * x.transpose();
    for i in 0..n {
        k[(i, i)] += n as f64 * lambda;
    }
    let alpha = spd_solve(&k, y, "dual ridge system").map_err(|_| Error::Singular {
        condition: condition_estimate(&k),
        context: "dual ridge system".into(),
    })?;
    Ok(x.transpose() * alpha)
}

/// Prepared `Lambda^{-1}` quadratic form for repeated bonus queries.
#[derive(Debug, Clone)]
pub struct UcbBonus {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl UcbBonus {
    pub fn new(lambda_matrix: &DMatrix<f64>) -> Result<Self> {
        let chol = lambda_matrix
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("bonus matrix Lambda".into()))?;
        Ok(UcbBonus { chol })
    }

    /// `sqrt(phi^T Lambda^{-1} phi)`.
    pub fn width(&self, phi: &[f64]) -> f64 {
        let mut v = DVector::from_column_slice(phi);
        self.chol.l().solve_lower_triangular_mut(&mut v);
        v.norm()
    }

    pub fn bonus(&self, phi: &[f64], beta: f64) -> f64 {
        beta * self.width(phi)
    }
}

/// `beta * sqrt(phi^T Lambda^{-1} phi)`.
pub fn ucb_bonus(phi: &DVector<f64>, lambda_matrix: &DMatrix<f64>, beta: f64) -> Result<f64> {
    if phi.len() != lambda_matrix.nrows() {
        return Err(Error::DimensionMismatch {
            expected: lambda_matrix.nrows(),
            got: phi.len(),
            context: "bonus feature vector",
        });
    }
    Ok(UcbBonus::new(lambda_matrix)?.bonus(phi.as_slice(), beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_targets_zero_weights() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 2.0, -1.0, 1.0]);
        let w = ridge_solve(&x, &DVector::zeros(3), 0.1).unwrap();
        assert!(w.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_closed_form() {
        // w = sum xy / (sum x^2 + n lambda) = 2 / 4
        let mut d = RidgeDesign::new(1, 1.0);
        d.push(&[1.0], 1.0);
        d.push(&[1.0], 1.0);
        assert!((ridge_fit(&d).unwrap()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn near_interpolation() {
        let x = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 3.0]);
        let w0 = DVector::from_vec(vec![0.3, -1.2, 0.7]);
        let y = &x * &w0;
        let w = ridge_solve(&x, &y, 1e-12).unwrap();
        assert!((w - w0).amax() < 1e-6);
    }

    #[test]
    fn singular_without_regularization_rejected() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(
            RidgeDesign::from_rows(&x, &y, 0.0).unwrap().fit(),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn dual_matches_primal() {
        let x = DMatrix::from_fn(3, 6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let y = DVector::from_vec(vec![1.0, -0.5, 2.0]);
        let dual = ridge_solve(&x, &y, 0.05).unwrap();
        let primal = RidgeDesign::from_rows(&x, &y, 0.05).unwrap().fit().unwrap();
        assert!((dual - primal).amax() < 1e-10);
    }

    #[test]
    fn bonus_hand_values() {
        let beta = 2.5;
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(ucb_bonus(&e1, &DMatrix::identity(2, 2), 0.0).unwrap(), 0.0);
        assert!((ucb_bonus(&e1, &DMatrix::identity(2, 2), beta).unwrap() - beta).abs() < 1e-15);
        let mut d = RidgeDesign::new(2, 1.0);
        d.push(&[1.0, 0.0], 0.0);
        let lam = d.lambda_matrix();
        assert!((ucb_bonus(&e1, &lam, beta).unwrap() - beta / 2f64.sqrt()).abs() < 1e-14);
        assert!((ucb_bonus(&e2, &lam, beta).unwrap() - beta).abs() < 1e-14);
    }

    #[test]
    fn bonus_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(ucb_bonus(&DVector::from_vec(vec![1.0, 0.0]), &m, 1.0).is_err());
    }
}
