use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{condition_estimate, spd_solve, sym_eigen_desc};

use super::kernels::Kernel;

/// Gram matrix `K = (k(x_i, x_j))` on a point list.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    points: Vec<Vec<f64>>,
    matrix: DMatrix<f64>,
}

impl GramMatrix {
    pub fn new(kernel: &Kernel, points: &[Vec<f64>]) -> Result<Self> {
        for p in points {
            kernel.check_point(p)?;
        }
        Ok(Self::new_unchecked(kernel, points))
    }

    pub(crate) fn new_unchecked(kernel: &Kernel, points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let mut matrix = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.eval_unchecked(&points[i], &points[j]);
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
        GramMatrix {
            points: points.to_vec(),
            matrix,
        }
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let (values, _) = sym_eigen_desc(&self.matrix);
        values[values.len() - 1]
    }

    /// Positive semidefinite up to roundoff: `lambda_min >= -1e-8 n`.
    pub fn check_psd(&self) -> Result<()> {
        let floor = -1e-8 * self.len() as f64;
        let min = self.min_eigenvalue();
        if min < floor {
            return Err(Error::NotPositiveDefinite(format!(
                "Gram matrix has eigenvalue {min:.3e} below {floor:.3e}"
            )));
        }
        Ok(())
    }
}

/// Kernel ridge estimator `f(x) = sum_i alpha_i k(x, x_i)`.
#[derive(Debug, Clone)]
pub struct KrrModel {
    pub kernel: Kernel,
    pub centers: Vec<Vec<f64>>,
    pub alpha: DVector<f64>,
}

impl KrrModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.centers
            .iter()
            .zip(self.alpha.iter())
            .map(|(c, a)| a * self.kernel.eval_unchecked(x, c))
            .sum()
    }
}

/// `alpha = (K + lambda n I)^{-1} y`.
pub fn krr_solve(gram: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = gram.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
            context: "kernel ridge targets",
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("ridge lambda must be >= 0, got {lambda}")));
    }
    let mut m = gram.clone();
    for i in 0..n {
        m[(i, i)] += lambda * n as f64;
    }
    spd_solve(&m, y, "kernel ridge system").map_err(|_| Error::Singular {
        condition: condition_estimate(&m),
        context: "kernel ridge system".into(),
    })
}

pub fn krr_fit(kernel: &Kernel, points: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<KrrModel> {
    let gram = GramMatrix::new(kernel, points)?;
    let alpha = krr_solve(gram.matrix(), &DVector::from_column_slice(y), lambda)?;
    Ok(KrrModel {
        kernel: kernel.clone(),
        centers: points.to_vec(),
        alpha,
    })
}
