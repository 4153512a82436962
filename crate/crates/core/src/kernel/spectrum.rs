use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen_desc;

use super::gram::GramMatrix;
use super::kernels::Kernel;

/// Eigenvalues below this are treated as outside the numerical range.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Mercer eigensystem of a kernel on a finite support under weights `rho`.
///
/// `eigenfunctions` holds `psi_i` as column `i`, evaluated on the support;
/// the columns are orthonormal in `L^2(rho)`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub eigenvalues: DVector<f64>,
    pub eigenfunctions: DMatrix<f64>,
    pub gram: DMatrix<f64>,
}

fn check_weights(rho: &[f64], n: usize) -> Result<()> {
    if rho.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rho.len(),
            context: "support weights",
        });
    }
    if rho.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::invalid("support weights must be strictly positive; drop zero-mass atoms"));
    }
    let total: f64 = rho.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("support weights sum to {total}, not 1")));
    }
    Ok(())
}

pub fn mercer_spectrum(kernel: &Kernel, support: &[Vec<f64>], rho: &[f64]) -> Result<Spectrum> {
    let gram = GramMatrix::new(kernel, support)?;
    Spectrum::from_gram(support.to_vec(), gram.matrix().clone(), rho)
}

impl Spectrum {
    /// Eigensystem of `D^{1/2} K D^{1/2}` mapped back through `D^{-1/2}`.
    pub fn from_gram(support: Vec<Vec<f64>>, gram: DMatrix<f64>, rho: &[f64]) -> Result<Self> {
        let n = gram.nrows();
        check_weights(rho, n)?;
        let sq: Vec<f64> = rho.iter().map(|w| w.sqrt()).collect();
        let weighted = DMatrix::from_fn(n, n, |i, j| sq[i] * gram[(i, j)] * sq[j]);
        let (eigenvalues, vectors) = sym_eigen_desc(&weighted);
        let eigenfunctions = DMatrix::from_fn(n, n, |i, j| vectors[(i, j)] / sq[i]);
        Ok(Spectrum {
            support,
            weights: rho.to_vec(),
            eigenvalues,
            eigenfunctions,
            gram,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.sum()
    }

    /// `E_rho k(x, x)`.
    pub fn diagonal_mean(&self) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * self.gram[(i, i)]).sum()
    }

    /// `<g, psi_i>_{L^2(rho)}` for every `i`.
    pub fn coefficients(&self, g: &[f64]) -> DVector<f64> {
        let wg = DVector::from_iterator(g.len(), g.iter().zip(&self.weights).map(|(a, w)| a * w));
        self.eigenfunctions.transpose() * wg
    }

    /// `max |K - sum_i lambda_i psi_i psi_i^T|`.
    pub fn reconstruction_error(&self) -> f64 {
        let scaled = DMatrix::from_fn(self.len(), self.len(), |i, j| {
            self.eigenfunctions[(i, j)] * self.eigenvalues[j]
        });
        let rec = scaled * self.eigenfunctions.transpose();
        (rec - &self.gram).amax()
    }

    /// Writes `index,eigenvalue,cumulative_tail` rows, where the tail at
    /// index `i` is `sum_{l >= i} lambda_l`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "eigenvalue", "cumulative_tail"])?;
        for i in 0..self.len() {
            w.write_record([
                i.to_string(),
                format!("{:e}", self.eigenvalues[i]),
                format!("{:e}", tail_sum(self, i)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkhsNorm {
    pub value: f64,
    /// First component with non-negligible coefficient on an eigenvalue at
    /// or below [`EIGEN_FLOOR`], as `(index, coefficient)`.
    pub outside_range: Option<(usize, f64)>,
}

/// `sqrt(sum_i <g, psi_i>^2 / lambda_i)`, `+inf` when `g` has mass on the
/// numerical null space of the spectrum.
pub fn rkhs_norm_detail(spec: &Spectrum, g: &[f64]) -> Result<RkhsNorm> {
    if g.len() != spec.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.len(),
            got: g.len(),
            context: "function on support",
        });
    }
    let c = spec.coefficients(g);
    let scale = c.norm().max(1.0);
    let mut sum = 0.0;
    for (i, (&ci, &li)) in c.iter().zip(spec.eigenvalues.iter()).enumerate() {
        if li <= EIGEN_FLOOR {
            if ci.abs() > 1e-9 * scale {
                return Ok(RkhsNorm {
                    value: f64::INFINITY,
                    outside_range: Some((i, ci)),
                });
            }
            continue;
        }
        sum += ci * ci / li;
    }
    Ok(RkhsNorm {
        value: sum.sqrt(),
        outside_range: None,
    })
}

pub fn rkhs_norm(spec: &Spectrum, g: &[f64]) -> Result<f64> {
    rkhs_norm_detail(spec, g).map(|r| r.value)
}

/// `sum_{i >= n} lambda_i` with 0-based indexing, i.e. the tail after the
/// `n` leading eigenvalues.
pub fn tail_sum(spec: &Spectrum, n: usize) -> f64 {
    spec.eigenvalues.iter().skip(n).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{simplex_point, stream, unit_sphere, Stream};

    fn seeded(seed: u64, n: usize) -> Spectrum {
        let mut rng = stream(seed, Stream::Custom(5));
        let pts: Vec<Vec<f64>> = (0..n).map(|_| unit_sphere(&mut rng, 3)).collect();
        let rho = simplex_point(&mut rng, n);
        mercer_spectrum(&Kernel::laplacian(1.0, 3), &pts, &rho).unwrap()
    }

    #[test]
    fn single_atom() {
        let s = mercer_spectrum(&Kernel::ntk(2), &[vec![0.6, 0.8]], &[1.0]).unwrap();
        assert!((s.eigenvalues[0] - 0.75).abs() < 1e-15);
        assert!((s.eigenfunctions[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_kernel_two_points() {
        let s = Spectrum::from_gram(vec![vec![0.0], vec![1.0]], DMatrix::identity(2, 2), &[0.5, 0.5]).unwrap();
        assert!((s.eigenvalues[0] - 0.5).abs() < 1e-15);
        assert!((s.eigenvalues[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_and_trace() {
        let s = seeded(1, 25);
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(&s.weights));
        let gram = s.eigenfunctions.transpose() * w * &s.eigenfunctions;
        assert!((gram - DMatrix::identity(25, 25)).amax() < 1e-8);
        assert!((s.trace() - s.diagonal_mean()).abs() < 1e-10);
        assert!(s.reconstruction_error() < 1e-8);
        assert!((tail_sum(&s, 0) - s.trace()).abs() < 1e-15);
        assert_eq!(tail_sum(&s, 25), 0.0);
        assert_eq!(tail_sum(&s, 40), 0.0);
    }

    #[test]
    fn rejects_bad_weights() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(mercer_spectrum(&Kernel::gaussian(1.0, 1), &pts, &[0.5, 0.6]).is_err());
        assert!(mercer_spectrum(&Kernel::gaussian(1.0, 1), &pts, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn norms_of_basic_functions() {
        let s = seeded(2, 20);
        assert_eq!(rkhs_norm(&s, &[0.0; 20]).unwrap(), 0.0);
        let psi1: Vec<f64> = s.eigenfunctions.column(0).iter().cloned().collect();
        assert!((rkhs_norm(&s, &psi1).unwrap() - 1.0 / s.eigenvalues[0].sqrt()).abs() < 1e-8);
        for x0 in [0, 7, 19] {
            let g: Vec<f64> = s.gram.column(x0).iter().cloned().collect();
            let n = rkhs_norm(&s, &g).unwrap();
            assert!((n - s.gram[(x0, x0)].sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn null_space_component_is_infinite() {
        // rank-one kernel: only constants are representable
        let gram = DMatrix::from_element(3, 3, 1.0);
        let s = Spectrum::from_gram(vec![vec![0.0]; 3], gram, &[0.2, 0.3, 0.5]).unwrap();
        assert!((rkhs_norm(&s, &[2.0, 2.0, 2.0]).unwrap() - 2.0).abs() < 1e-12);
        let r = rkhs_norm_detail(&s, &[1.0, -1.0, 0.0]).unwrap();
        assert!(r.value.is_infinite());
        assert!(r.outside_range.is_some());
    }

    #[test]
    fn csv_export() {
        let s = seeded(3, 4);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,eigenvalue,cumulative_tail\n"));
        assert_eq!(text.lines().count(), 5);
    }
}
