mod common;

use common::brute_force_jstar;
use proptest::prelude::*;
use rand::Rng;
use rlfa_core::mdp::*;
use rlfa_core::rng::{stream, Stream};
use rlfa_core::simulator::EpisodicSimulator;

#[test]
fn jstar_matches_enumeration() {
    let mut rng = stream(1, Stream::Instance);
    let mdp = FiniteMdp::random(&mut rng, 3, 2, 2);
    let sol = solve_exact(&mdp);
    assert!((sol.jstar - brute_force_jstar(&mdp)).abs() < 1e-10);
}

#[test]
fn policy_value_matches_monte_carlo() {
    let mut rng = stream(2, Stream::Instance);
    let mdp = FiniteMdp::random(&mut rng, 4, 3, 3);
    let pi = Policy::random(&mut rng, 3, 4, 3);
    let j = evaluate_policy(&mdp, &pi).unwrap().j;
    let mut sim = EpisodicSimulator::new(&mdp, 2);
    let mut actions = stream(2, Stream::Actions);
    let n = 1_000_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let g = sim.rollout(&pi, &mut actions).unwrap().total_reward();
        sum += g;
        sq += g * g;
    }
    let mean = sum / n as f64;
    let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - j).abs() < 3.0 * se, "mc {mean} exact {j} se {se}");
}

#[test]
fn occupancy_matches_visit_frequencies() {
    let mut rng = stream(3, Stream::Instance);
    let mdp = FiniteMdp::random(&mut rng, 3, 2, 3);
    let pi = Policy::random(&mut rng, 3, 3, 2);
    let occ = occupancy(&mdp, &pi).unwrap();
    let mut sim = EpisodicSimulator::new(&mdp, 3);
    let mut actions = stream(3, Stream::Actions);
    let n = 1_000_000;
    let mut counts = vec![vec![0usize; 6]; 3];
    for _ in 0..n {
        for t in sim.rollout(&pi, &mut actions).unwrap().steps {
            counts[t.h][t.s * 2 + t.a] += 1;
        }
    }
    for h in 0..3 {
        for p in 0..6 {
            let q = occ[h].probs[p];
            let freq = counts[h][p] as f64 / n as f64;
            let se = (q * (1.0 - q) / n as f64).sqrt().max(1e-12);
            assert!((freq - q).abs() <= 3.0 * se + 1e-12, "h={h} p={p}: {freq} vs {q}");
        }
    }
}

#[test]
fn softmax_bound_on_random_instances() {
    let mut rng = stream(4, Stream::Instance);
    for trial in 0..200 {
        let ns = rng.random_range(1..=4);
        let na = rng.random_range(2..=3);
        let horizon = rng.random_range(1..=3);
        let mdp = FiniteMdp::random(&mut rng, ns, na, horizon);
        let beta = [0.5, 1.0, 2.0, 8.0][trial % 4];
        let exact = solve_exact(&mdp);
        let scale = rng.random::<f64>();
        let values: Vec<f64> = exact
            .qstar
            .values()
            .iter()
            .map(|v| v + scale * (rng.random::<f64>() - 0.5))
            .collect();
        let q = QTable::from_values(horizon, ns, na, values).unwrap();
        // Independent assembly of both sides.
        let played = evaluate_policy(&mdp, &softmax_policy(&q, beta).unwrap()).unwrap().j;
        let lhs = exact.jstar - played;
        let laws = occupancy(&mdp, &softmax_policy(&exact.qstar, beta).unwrap()).unwrap();
        let mut gap = 0.0;
        for (h, law) in laws.iter().enumerate() {
            for s in 0..ns {
                let mass: f64 = (0..na).map(|a| law.get(s, a)).sum();
                let worst = (0..na)
                    .map(|a| (q.get(h, s, a) - exact.qstar.get(h, s, a)).abs())
                    .fold(0.0, f64::max);
                gap += mass * worst;
            }
        }
        let h = horizon as f64;
        let rhs = h * (na as f64).ln() / beta + 2.0 * beta * h * gap;
        assert!(lhs >= -1e-8 && rhs - lhs >= -1e-8, "trial {trial}");
        let lib = softmax_gap_bound(&mdp, &q, beta).unwrap();
        assert!((lib.lhs - lhs).abs() < 1e-12 && (lib.rhs - rhs).abs() < 1e-10);
    }
}

fn mdp_strategy() -> impl Strategy<Value = FiniteMdp> {
    (any::<u64>(), 1usize..5, 1usize..4, 1usize..4)
        .prop_map(|(seed, ns, na, h)| FiniteMdp::random(&mut stream(seed, Stream::Instance), ns, na, h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_of_qstar_attains_jstar(mdp in mdp_strategy()) {
        let sol = solve_exact(&mdp);
        let j = evaluate_policy(&mdp, &sol.pistar).unwrap().j;
        prop_assert!((j - sol.jstar).abs() < 1e-10);
        prop_assert!(sol.jstar <= mdp.horizon() as f64 + 1e-12 && sol.jstar >= -1e-12);
    }

    #[test]
    fn no_policy_beats_jstar(mdp in mdp_strategy(), seed in any::<u64>()) {
        let pi = Policy::random(&mut stream(seed, Stream::Custom(0)), mdp.horizon(), mdp.n_states(), mdp.n_actions());
        let j = evaluate_policy(&mdp, &pi).unwrap().j;
        prop_assert!(j <= solve_exact(&mdp).jstar + 1e-12);
    }

    #[test]
    fn occupancies_are_distributions(mdp in mdp_strategy(), seed in any::<u64>()) {
        let pi = Policy::random(&mut stream(seed, Stream::Custom(0)), mdp.horizon(), mdp.n_states(), mdp.n_actions());
        for occ in occupancy(&mdp, &pi).unwrap() {
            prop_assert!((occ.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(occ.probs.iter().all(|p| *p >= 0.0));
        }
    }

    #[test]
    fn bellman_is_monotone(mdp in mdp_strategy(), seed in any::<u64>()) {
        let mut rng = stream(seed, Stream::Custom(0));
        let n = mdp.n_states() * mdp.n_actions();
        let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let g: Vec<f64> = f.iter().map(|v| v + rng.random::<f64>()).collect();
        let tf = apply_bellman_optimal(&mdp, 0, &f).unwrap();
        let tg = apply_bellman_optimal(&mdp, 0, &g).unwrap();
        prop_assert!(tf.iter().zip(&tg).all(|(a, b)| *a <= *b + 1e-12));
    }

    #[test]
    fn policy_q_satisfies_bellman(mdp in mdp_strategy(), seed in any::<u64>()) {
        let pi = Policy::random(&mut stream(seed, Stream::Custom(0)), mdp.horizon(), mdp.n_states(), mdp.n_actions());
        let eval = evaluate_policy(&mdp, &pi).unwrap();
        for h in 0..mdp.horizon() {
            let v_next: Vec<f64> = if h + 1 < mdp.horizon() {
                policy_values(&eval.q, &pi, h + 1)
            } else {
                vec![0.0; mdp.n_states()]
            };
            let backed = apply_bellman(&mdp, h, &v_next).unwrap();
            for s in 0..mdp.n_states() {
                for a in 0..mdp.n_actions() {
                    let mut expect = mdp.reward(h, s, a);
                    if h + 1 < mdp.horizon() {
                        for (t, p) in mdp.transition_row(h, s, a).iter().enumerate() {
                            let v: f64 = (0..mdp.n_actions()).map(|b| pi.prob(h + 1, t, b) * eval.q.get(h + 1, t, b)).sum();
                            expect += p * v;
                        }
                    }
                    prop_assert!((eval.q.get(h, s, a) - expect).abs() < 1e-12);
                    prop_assert!((backed[s * mdp.n_actions() + a] - expect).abs() < 1e-12);
                }
            }
        }
    }
}
