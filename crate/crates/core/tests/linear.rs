use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rlfa_core::linear::*;
use rlfa_core::mdp::{apply_bellman, default_labels, evaluate_policy, policy_values, FiniteMdp, Policy};
use rlfa_core::rng::{stream, Stream};

fn linear_instance(seed: u64, ns: usize, na: usize, d: usize, h: usize) -> (LinearMdpSpec, FiniteMdp) {
    let mut rng = stream(seed, Stream::Instance);
    let spec = LinearMdpSpec::random(&mut rng, ns, na, d, h);
    let mdp = build_linear_mdp(&spec, default_labels("s", ns), default_labels("a", na)).unwrap();
    (spec, mdp)
}

#[test]
fn bellman_images_are_linear_with_known_weights() {
    let (spec, mdp) = linear_instance(1, 7, 3, 4, 3);
    let proj = FeatureProjector::new(&spec.features);
    let mut rng = stream(1, Stream::Custom(0));
    for _ in 0..50 {
        let f: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        for h in 0..3 {
            let tf = apply_bellman(&mdp, h, &f).unwrap();
            let omega = &spec.reward_weights[h] + &spec.measure_weights[h] * DVector::from_column_slice(&f);
            for s in 0..7 {
                for a in 0..3 {
                    let direct = spec.features.phi(s, a).dot(&omega);
                    assert!((direct - tf[s * 3 + a]).abs() < 1e-12);
                }
            }
            assert!(proj.fit(&tf).1 <= 1e-8);
        }
    }
}

#[test]
fn policy_q_is_linear() {
    let (spec, mdp) = linear_instance(2, 6, 2, 3, 4);
    let proj = FeatureProjector::new(&spec.features);
    let mut rng = stream(2, Stream::Custom(0));
    for _ in 0..20 {
        let pi = Policy::random(&mut rng, 4, 6, 2);
        let eval = evaluate_policy(&mdp, &pi).unwrap();
        for h in 0..4 {
            let (_, res) = proj.fit(eval.q.step(h));
            assert!(res <= 1e-10, "residual {res}");
            let v_next = if h + 1 < 4 { policy_values(&eval.q, &pi, h + 1) } else { vec![0.0; 6] };
            let w = &spec.reward_weights[h] + &spec.measure_weights[h] * DVector::from_vec(v_next);
            for s in 0..6 {
                for a in 0..2 {
                    assert!((spec.features.phi(s, a).dot(&w) - eval.q.get(h, s, a)).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn tabular_embedding_is_closed() {
    let mut rng = stream(3, Stream::Instance);
    let mdp = FiniteMdp::random(&mut rng, 4, 3, 2);
    let emb = tabular_embedding(&mdp);
    let report = check_linear_closure(&mdp, &emb.features, 50, &mut rng).unwrap();
    assert!(report.is_closed(1e-10));
}

/// Ridge solution via the stacked system `[X; sqrt(n lambda) I] w = [y; 0]`.
fn stacked_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let (n, d) = (x.nrows(), x.ncols());
    let root = (n as f64 * lambda).sqrt();
    let a = DMatrix::from_fn(n + d, d, |r, c| if r < n { x[(r, c)] } else if r - n == c { root } else { 0.0 });
    let mut b = DVector::zeros(n + d);
    b.rows_mut(0, n).copy_from(y);
    a.svd(true, true).solve(&b, 1e-14).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ridge_matches_stacked_least_squares(
        seed in any::<u64>(),
        n in 1usize..12,
        d in 1usize..8,
        lambda in 1e-4f64..10.0,
    ) {
        let mut rng = stream(seed, Stream::Custom(0));
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let w = ridge_solve(&x, &y, lambda).unwrap();
        let oracle = stacked_ridge(&x, &y, lambda);
        prop_assert!((w - oracle).amax() < 1e-8);
    }

    #[test]
    fn bonus_shrinks_with_data(seed in any::<u64>(), d in 1usize..6, extra in 1usize..10) {
        let mut rng = stream(seed, Stream::Custom(1));
        let mut design = RidgeDesign::new(d, 0.1).with_regularizer_count(10);
        let phi: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let before = UcbBonus::new(&design.lambda_matrix()).unwrap().width(&phi);
        for _ in 0..extra {
            let row: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            design.push(&row, 0.0);
        }
        let after = UcbBonus::new(&design.lambda_matrix()).unwrap().width(&phi);
        prop_assert!(after <= before + 1e-12);
    }

    #[test]
    fn simplex_projection_is_a_distribution(v in prop::collection::vec(-5.0f64..5.0, 1..10)) {
        let p = project_to_simplex(&v);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
    }
}
