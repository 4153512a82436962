use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{pinv_sym, PINV_RELATIVE_CUTOFF};

use super::gram::GramMatrix;
use super::kernels::Kernel;

/// Power function `P(x) = sqrt(k(x,x) - k_x^T K_n^+ k_x)` of a center set.
#[derive(Debug, Clone)]
pub struct PowerFunction {
    kernel: Kernel,
    centers: Vec<Vec<f64>>,
    pinv: DMatrix<f64>,
}

impl PowerFunction {
    pub fn new(kernel: &Kernel, centers: &[Vec<f64>]) -> Result<Self> {
        let gram = GramMatrix::new(kernel, centers)?;
        gram.check_psd()?;
        Ok(PowerFunction {
            kernel: kernel.clone(),
            centers: centers.to_vec(),
            pinv: pinv_sym(gram.matrix(), PINV_RELATIVE_CUTOFF),
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    fn kx(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.centers.len(),
            self.centers.iter().map(|c| self.kernel.eval_unchecked(x, c)),
        )
    }

    /// `P(x)^2`, exactly 0 at a center and clamped below at 0 elsewhere.
    pub fn squared(&self, x: &[f64]) -> f64 {
        if self.centers.iter().any(|c| c.as_slice() == x) {
            return 0.0;
        }
        let kx = self.kx(x);
        let explained = kx.dot(&(&self.pinv * &kx));
        (self.kernel.eval_unchecked(x, x) - explained).max(0.0)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.kernel.check_point(x)?;
        Ok(self.squared(x).sqrt())
    }
}

pub fn power_function(kernel: &Kernel, centers: &[Vec<f64>], x: &[f64]) -> Result<f64> {
    PowerFunction::new(kernel, centers)?.eval(x)
}

/// `P(x_j)^2` at every support point `x_j` for centers chosen by index
/// from the same support, computed from the full Gram matrix.
pub fn power_squared_on_support(gram: &DMatrix<f64>, centers: &[usize]) -> Result<Vec<f64>> {
    let n = gram.nrows();
    if let Some(&bad) = centers.iter().find(|&&c| c >= n) {
        return Err(Error::invalid(format!("center index {bad} outside support of size {n}")));
    }
    let kn = DMatrix::from_fn(centers.len(), centers.len(), |i, j| gram[(centers[i], centers[j])]);
    let pinv = pinv_sym(&kn, PINV_RELATIVE_CUTOFF);
    Ok((0..n)
        .map(|x| {
            if centers.contains(&x) {
                return 0.0;
            }
            let kx = DVector::from_iterator(centers.len(), centers.iter().map(|&c| gram[(x, c)]));
            (gram[(x, x)] - kx.dot(&(&pinv * &kx))).max(0.0)
        })
        .collect())
}

/// Minimal upper confidence map for data `f(x_i)`: the minimum-norm
/// interpolant `s` plus `sqrt(1 - ||s||^2) P(x)`. Any function with RKHS
/// norm at most 1 agreeing with the data lies below it.
#[derive(Debug, Clone)]
pub struct MinimalUcb {
    power: PowerFunction,
    coefficients: DVector<f64>,
    slack: f64,
}

impl MinimalUcb {
    pub fn new(kernel: &Kernel, centers: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        if values.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: values.len(),
                context: "interpolation data",
            });
        }
        let power = PowerFunction::new(kernel, centers)?;
        let f = DVector::from_column_slice(values);
        let coefficients = &power.pinv * &f;
        let norm_sq = f.dot(&coefficients);
        Ok(MinimalUcb {
            slack: (1.0 - norm_sq).max(0.0).sqrt(),
            power,
            coefficients,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let s: f64 = self.power.kx(x).dot(&self.coefficients);
        Ok(s + self.slack * self.power.eval(x)?)
    }
}
