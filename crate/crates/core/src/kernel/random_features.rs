use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linear::ridge_solve;
use crate::rng::unit_sphere;

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn sample_directions<R: Rng + ?Sized>(rng: &mut R, m: usize, dim: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(m, dim);
    for i in 0..m {
        for (j, v) in unit_sphere(rng, dim).into_iter().enumerate() {
            w[(i, j)] = v;
        }
    }
    w
}

/// Two-layer network `f(x) = (1/m) sum_j c_j relu(omega_j^T x)`.
#[derive(Debug, Clone)]
pub struct TwoLayerModel {
    pub directions: DMatrix<f64>,
    pub coefficients: DVector<f64>,
}

impl TwoLayerModel {
    pub fn width(&self) -> usize {
        self.directions.nrows()
    }

    pub fn features(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        feature_matrix(&self.directions, points)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let m = self.width();
        (0..m)
            .map(|j| {
                let z: f64 = self.directions.row(j).iter().zip(x).map(|(a, b)| a * b).sum();
                self.coefficients[j] * relu(z)
            })
            .sum::<f64>()
            / m as f64
    }
}

fn feature_matrix(directions: &DMatrix<f64>, points: &[Vec<f64>]) -> DMatrix<f64> {
    let m = directions.nrows();
    let x = DMatrix::from_fn(points.len(), directions.ncols(), |i, j| points[i][j]);
    (x * directions.transpose()).map(|z| relu(z) / m as f64)
}

#[derive(Debug, Clone)]
pub struct RandomFeatureFit {
    pub model: TwoLayerModel,
    pub train_mse: f64,
}

/// Ridge fit of the outer layer over the given first-layer directions.
pub fn random_feature_regress_with(
    points: &[Vec<f64>],
    targets: &[f64],
    directions: DMatrix<f64>,
    lambda: f64,
) -> Result<RandomFeatureFit> {
    if directions.nrows() == 0 {
        return Err(Error::invalid("random-feature width m must be positive"));
    }
    if points.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: targets.len(),
            context: "random-feature targets",
        });
    }
    for p in points {
        if p.len() != directions.ncols() {
            return Err(Error::DimensionMismatch {
                expected: directions.ncols(),
                got: p.len(),
                context: "random-feature input",
            });
        }
        let n: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (n - 1.0).abs() > crate::kernel::SPHERE_TOL {
            return Err(Error::invalid("random-feature inputs must lie on the unit sphere"));
        }
    }
    let x = feature_matrix(&directions, points);
    let y = DVector::from_column_slice(targets);
    let coefficients = ridge_solve(&x, &y, lambda)?;
    let resid = &x * &coefficients - &y;
    let train_mse = if targets.is_empty() {
        0.0
    } else {
        resid.norm_squared() / targets.len() as f64
    };
    Ok(RandomFeatureFit {
        model: TwoLayerModel {
            directions,
            coefficients,
        },
        train_mse,
    })
}

/// Draws `m` uniform directions and ridge-fits the outer coefficients.
pub fn random_feature_regress<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    targets: &[f64],
    m: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<RandomFeatureFit> {
    if m == 0 {
        return Err(Error::invalid("random-feature width m must be positive"));
    }
    let dim = points.first().map_or(1, |p| p.len());
    random_feature_regress_with(points, targets, sample_directions(rng, m, dim), lambda)
}

/// Barron-type target `f(x) = E_omega[a(omega) relu(omega^T x)]`, realized
/// by a wide network with smooth outer weights `a(omega) = cos(omega^T v)`.
pub fn barron_target<R: Rng + ?Sized>(rng: &mut R, dim: usize, width: usize) -> TwoLayerModel {
    let directions = sample_directions(rng, width, dim);
    let v: Vec<f64> = unit_sphere(rng, dim).into_iter().map(|x| 3.0 * x).collect();
    let coefficients = DVector::from_iterator(
        width,
        (0..width).map(|j| {
            let z: f64 = directions.row(j).iter().zip(&v).map(|(a, b)| a * b).sum();
            z.cos()
        }),
    );
    TwoLayerModel {
        directions,
        coefficients,
    }
}
