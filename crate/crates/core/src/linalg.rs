//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative cutoff below which eigen/singular values count as zero.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Symmetric eigendecomposition with eigenvalues sorted nonincreasing.
/// Columns of the returned matrix are the matching unit eigenvectors.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

/// Ratio of extreme absolute eigenvalues of a symmetric matrix.
pub fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let (values, _) = sym_eigen_desc(m);
    let max = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let min = values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `m x = b` for symmetric positive-definite `m` by Cholesky.
/// Cholesky solve. Factorizations whose pivots span more than 7 orders of
/// magnitude (condition above ~1e14) are treated as singular.
pub fn spd_solve(m: &DMatrix<f64>, b: &DVector<f64>, context: &str) -> Result<DVector<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(context.to_string()))?;
    let diag = chol.l_dirty().diagonal();
    let max = diag.iter().fold(0.0f64, |a, v| a.max(*v));
    let min = diag.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if diag.len() > 0 && (!min.is_finite() || !(min > 1e-7 * max)) {
        return Err(Error::NotPositiveDefinite(context.to_string()));
    }
    Ok(chol.solve(b))
}

pub fn pinv_sym(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let (values, vectors) = sym_eigen_desc(m);
    let cutoff = rel_cutoff * values[0].abs().max(0.0);
    let mut out = DMatrix::zeros(n, n);
    for (i, &lambda) in values.iter().enumerate() {
        if lambda > cutoff && lambda > 0.0 {
            let v = vectors.column(i);
            out += (v * v.transpose()) / lambda;
        }
    }
    out
}

/// Minimum-norm least-squares solution of `x w ≈ y` via SVD.
pub fn lstsq_min_norm(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return DVector::zeros(x.ncols());
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (PINV_RELATIVE_CUTOFF * smax).max(f64::MIN_POSITIVE);
    svd.solve(y, eps)
        .unwrap_or_else(|_| DVector::zeros(x.ncols()))
}
