mod common;

use common::{conjugate_gradient, median};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::Rng;
use rlfa_core::kernel::*;
use rlfa_core::rng::{standard_normal, stream, unit_sphere, Stream, StreamRng};

fn sphere(rng: &mut StreamRng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| unit_sphere(rng, d)).collect()
}

/// Monte Carlo NTK: `E[x.x' 1{w.x > 0} 1{w.x' > 0}] + E[relu(w.x) relu(w.x')]`, `w ~ N(0, I/d)`.
fn ntk_monte_carlo(x: &[f64], y: &[f64], samples: usize, rng: &mut StreamRng) -> f64 {
    let d = x.len();
    let u: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let scale = 1.0 / (d as f64).sqrt();
    let mut acc = 0.0;
    for _ in 0..samples {
        let w: Vec<f64> = (0..d).map(|_| standard_normal(rng) * scale).collect();
        let zx: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
        let zy: f64 = w.iter().zip(y).map(|(a, b)| a * b).sum();
        if zx > 0.0 && zy > 0.0 {
            acc += u + zx * zy;
        }
    }
    acc / samples as f64
}

#[test]
fn ntk_closed_form_matches_monte_carlo() {
    let d = 4;
    let k = Kernel::ntk(d);
    let mut rng = stream(1, Stream::Custom(0));
    let x = vec![1.0, 0.0, 0.0, 0.0];
    let same = k.eval(&x, &x).unwrap();
    assert!((same - (0.5 + 1.0 / (2.0 * d as f64))).abs() < 1e-12);
    let mc = ntk_monte_carlo(&x, &x, 1_000_000, &mut rng);
    assert!((mc - same).abs() < 5e-3, "mc {mc} closed {same}");
    let y = vec![0.0, 1.0, 0.0, 0.0];
    let orth = k.eval(&x, &y).unwrap();
    assert!((orth - 1.0 / (2.0 * std::f64::consts::PI * d as f64)).abs() < 1e-12);
    let mc = ntk_monte_carlo(&x, &y, 1_000_000, &mut rng);
    assert!((mc - orth).abs() < 2e-3, "mc {mc} closed {orth}");
    for _ in 0..5 {
        let a = unit_sphere(&mut rng, d);
        let b = unit_sphere(&mut rng, d);
        let mc = ntk_monte_carlo(&a, &b, 400_000, &mut rng);
        assert!((mc - k.eval(&a, &b).unwrap()).abs() < 5e-3);
    }
}

#[test]
fn random_feature_kernel_matches_sampled_directions() {
    let d = 3;
    let mut rng = stream(2, Stream::Custom(0));
    let exact = Kernel::random_feature(d);
    let mc = Kernel::random_feature_mc(d, 200_000, &mut rng);
    for _ in 0..5 {
        let a = unit_sphere(&mut rng, d);
        let b = unit_sphere(&mut rng, d);
        assert!((exact.eval(&a, &b).unwrap() - mc.eval(&a, &b).unwrap()).abs() < 3e-3);
    }
}

#[test]
fn krr_matches_conjugate_gradient() {
    for seed in 0..20u64 {
        let mut rng = stream(seed, Stream::Instance);
        let n = 10 + seed as usize;
        let pts = sphere(&mut rng, n, 3);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = Kernel::gaussian(1.5, 3);
        let lambda = 1e-3;
        let model = krr_fit(&k, &pts, &y, lambda).unwrap();
        let gram = GramMatrix::new(&k, &pts).unwrap().matrix().clone();
        let m = &gram + DMatrix::identity(n, n) * (n as f64 * lambda);
        let alpha = conjugate_gradient(&m, &DVector::from_vec(y), 1e-14);
        let oracle = &gram * alpha;
        for (i, p) in pts.iter().enumerate() {
            assert!((model.predict(p) - oracle[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn krr_error_decreases_with_samples() {
    let k = Kernel::gaussian(2.0, 3);
    let mut errors = vec![vec![]; 3];
    for seed in 0..10u64 {
        let mut rng = stream(seed, Stream::Instance);
        let centers = sphere(&mut rng, 5, 3);
        let c: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target = |x: &[f64]| -> f64 { centers.iter().zip(&c).map(|(z, w)| w * k.eval_unchecked(x, z)).sum() };
        let test = sphere(&mut rng, 500, 3);
        for (i, n) in [16usize, 64, 256].into_iter().enumerate() {
            let pts = sphere(&mut rng, n, 3);
            let y: Vec<f64> = pts.iter().map(|p| target(p) + 0.1 * standard_normal(&mut rng)).collect();
            let model = krr_fit(&k, &pts, &y, 1.0 / (n as f64).sqrt()).unwrap();
            let mse = test.iter().map(|x| (model.predict(x) - target(x)).powi(2)).sum::<f64>() / 500.0;
            errors[i].push(mse);
        }
    }
    let med: Vec<f64> = errors.iter().map(|e| median(e)).collect();
    assert!(med[0] > med[1] && med[1] > med[2], "{med:?}");
}

/// `sum_x rho(x) k_C(x)^T K_CC^{-1} k_C(x)`: the `L^2(rho)` mass of an
/// RKHS-orthonormal basis of the span of the center sections.
fn projected_mass(gram: &DMatrix<f64>, rho: &[f64], centers: &[usize]) -> f64 {
    let kcc = DMatrix::from_fn(centers.len(), centers.len(), |i, j| gram[(centers[i], centers[j])]);
    let chol = kcc.cholesky().expect("distinct centers");
    (0..gram.nrows())
        .map(|x| {
            let kx = DVector::from_iterator(centers.len(), centers.iter().map(|&c| gram[(x, c)]));
            rho[x] * kx.dot(&chol.solve(&kx))
        })
        .sum()
}

#[test]
fn power_function_spectral_identities() {
    let kernels = [Kernel::gaussian(1.0, 3), Kernel::laplacian(1.0, 3), Kernel::ntk(3)];
    for seed in 0..20u64 {
        let mut rng = stream(seed, Stream::Instance);
        let n = 24 + (seed as usize % 5) * 10;
        let pts = sphere(&mut rng, n, 3);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = w.iter().sum();
        let rho: Vec<f64> = w.iter().map(|v| v / total).collect();
        let kernel = &kernels[seed as usize % 3];
        let spec = mercer_spectrum(kernel, &pts, &rho).unwrap();
        let trace: f64 = (0..n).map(|i| rho[i] * spec.gram[(i, i)]).sum();
        assert!((spec.eigenvalues.sum() - trace).abs() < 1e-10);
        assert!(spec.reconstruction_error() <= 1e-8);
        for m in [1usize, 4, 16] {
            let centers = sample(&mut rng, n, m).into_vec();
            let p2 = power_squared_on_support(&spec.gram, &centers).unwrap();
            let expected_power: f64 = p2.iter().zip(&rho).map(|(p, r)| p * r).sum();
            let mass = projected_mass(&spec.gram, &rho, &centers);
            assert!((expected_power - (trace - mass)).abs() < 1e-8);
            assert!(expected_power >= tail_sum(&spec, m) - 1e-8, "seed {seed} m {m}");
            let head: f64 = spec.eigenvalues.iter().take(m).sum();
            assert!(mass <= head + 1e-8);
        }
    }
}

#[test]
fn random_feature_error_falls_like_inverse_width() {
    let d = 3;
    let mut e64 = vec![];
    let mut e256 = vec![];
    for seed in 0..7u64 {
        let mut rng = stream(seed, Stream::Instance);
        let target = barron_target(&mut rng, d, 4000);
        let pts = sphere(&mut rng, 1500, d);
        let y: Vec<f64> = pts.iter().map(|p| target.eval(p)).collect();
        let mut alg = stream(seed, Stream::Algorithm);
        e64.push(random_feature_regress(&pts, &y, 64, 1e-10, &mut alg).unwrap().train_mse);
        e256.push(random_feature_regress(&pts, &y, 256, 1e-10, &mut alg).unwrap().train_mse);
    }
    assert!(median(&e256) <= 0.5 * median(&e64), "{} vs {}", median(&e256), median(&e64));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reproducing_property(seed in any::<u64>(), n in 2usize..20) {
        let mut rng = stream(seed, Stream::Custom(3));
        let pts = sphere(&mut rng, n, 3);
        let spec = mercer_spectrum(&Kernel::laplacian(1.0, 3), &pts, &vec![1.0 / n as f64; n]).unwrap();
        let x0 = rng.random_range(0..n);
        let g: Vec<f64> = (0..n).map(|i| spec.gram[(i, x0)]).collect();
        prop_assert!((rkhs_norm(&spec, &g).unwrap() - spec.gram[(x0, x0)].sqrt()).abs() < 1e-6);
    }

    #[test]
    fn gram_matrices_are_psd(seed in any::<u64>(), n in 1usize..25, which in 0usize..4) {
        let mut rng = stream(seed, Stream::Custom(4));
        let pts = sphere(&mut rng, n, 4);
        let k = [Kernel::gaussian(0.7, 4), Kernel::laplacian(1.3, 4), Kernel::ntk(4), Kernel::random_feature(4)][which].clone();
        let g = GramMatrix::new(&k, &pts).unwrap();
        prop_assert!(g.check_psd().is_ok());
        prop_assert!(g.min_eigenvalue() >= -1e-8 * n as f64);
    }

    #[test]
    fn power_never_increases_with_more_centers(seed in any::<u64>()) {
        let mut rng = stream(seed, Stream::Custom(5));
        let pts = sphere(&mut rng, 30, 3);
        let k = Kernel::gaussian(1.0, 3);
        let gram = GramMatrix::new(&k, &pts).unwrap().matrix().clone();
        let few = power_squared_on_support(&gram, &[0, 1, 2]).unwrap();
        let more = power_squared_on_support(&gram, &[0, 1, 2, 3, 4, 5]).unwrap();
        prop_assert!(few.iter().zip(&more).all(|(a, b)| *b <= *a + 1e-10));
    }
}
