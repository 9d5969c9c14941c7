mod common;

use common::{random_measure, rng, uniform_measure};
use est_core::{
    est_plan, est_plan_tempered, min_swgg, sample_sphere, sigma_tau_weights, validate_coupling, wasserstein_exact,
    EstConfig, SliceSet,
};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 1usize..=20, 1usize..=20, 1usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn est_plan_is_a_coupling_above_wasserstein((seed, n, m, d) in instance()) {
        let mut r = rng(seed);
        let (mu, nu) = (random_measure(&mut r, n, d, seed % 2 == 0), random_measure(&mut r, m, d, seed % 2 == 0));
        let slices = SliceSet::sample(16, d, seed).unwrap();
        let est = est_plan(&mu, &nu, &slices, 2.0).unwrap();
        let rep = validate_coupling(&est.plan, &mu, &nu);
        prop_assert!(rep.valid && rep.max_deviation <= 1e-9);
        let (_, w) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        prop_assert!(w <= est.distance + 1e-10);
    }

    #[test]
    fn min_swgg_sits_between_wasserstein_and_est((seed, n, _, d) in instance()) {
        let mut r = rng(seed);
        let (mu, nu) = (uniform_measure(&mut r, n.max(2), d), uniform_measure(&mut r, n.max(2), d));
        let dirs = sample_sphere(64, d, seed);
        let best = min_swgg(&mu, &nu, &dirs, 2.0).unwrap();
        let est = est_plan_tempered(&mu, &nu, &dirs, 2.0, 0.0).unwrap();
        let (_, w) = wasserstein_exact(&mu, &nu, 2.0).unwrap();
        prop_assert!(validate_coupling(&best.plan, &mu, &nu).valid);
        prop_assert!(w <= best.cost + 1e-10);
        prop_assert!(best.cost <= est.distance + 1e-12);
        prop_assert!(best.plan.len() <= est.plan.len());
    }

    #[test]
    fn tempered_weights_are_shift_invariant(
        costs in prop::collection::vec(0.0..10.0f64, 1..30),
        shift in -5.0..5.0f64,
        tau in 0.0..20.0f64,
        scale in 0.1..10.0f64,
    ) {
        let a = sigma_tau_weights(&costs, tau);
        let shifted: Vec<f64> = costs.iter().map(|c| c + shift).collect();
        let b = sigma_tau_weights(&shifted, tau);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let argmax = |w: &[f64]| (0..w.len()).fold(0, |best, i| if w[i] > w[best] { i } else { best });
        if tau > 0.0 {
            prop_assert_eq!(argmax(&a), argmax(&sigma_tau_weights(&costs, tau * scale)));
        }
    }

    #[test]
    fn results_are_reproducible((seed, n, m, d) in instance(), tau in 0.0..5.0f64) {
        let mut r = rng(seed);
        let (mu, nu) = (random_measure(&mut r, n, d, false), random_measure(&mut r, m, d, false));
        let dirs = sample_sphere(32, d, seed);
        let a = est_plan_tempered(&mu, &nu, &dirs, 2.0, tau).unwrap();
        let b = est_plan_tempered(&mu, &nu, &sample_sphere(32, d, seed), 2.0, tau).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn tempered_distance_interpolates_between_limits() {
    let mut r = rng(5);
    let mu = uniform_measure(&mut r, 15, 2);
    let nu = uniform_measure(&mut r, 15, 2);
    let dirs = sample_sphere(32, 2, 5);
    let cfg = EstConfig::new(2.0);
    let distances: Vec<f64> = [0.0, 0.1, 1.0, 10.0, 1e12]
        .iter()
        .map(|&tau| cfg.tempered(&mu, &nu, &dirs, tau).unwrap().distance)
        .collect();
    assert!(distances.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{distances:?}");
    let best = cfg.min_swgg(&mu, &nu, &dirs).unwrap();
    assert!((distances[4] - best.cost).abs() <= 1e-12);
}

#[test]
fn p_one_and_p_three_are_supported() {
    let mut r = rng(6);
    let mu = random_measure(&mut r, 10, 3, false);
    let nu = random_measure(&mut r, 8, 3, false);
    let slices = SliceSet::sample(32, 3, 6).unwrap();
    for p in [1.0, 3.0] {
        let est = est_plan(&mu, &nu, &slices, p).unwrap();
        let (_, w) = wasserstein_exact(&mu, &nu, p).unwrap();
        assert!(w <= est.distance + 1e-10);
    }
}
