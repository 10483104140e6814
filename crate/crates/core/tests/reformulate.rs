//! Reformulation contracts: importance-resampling preserves the problem (up
//! to the documented global scaling), the duplication bound, and the
//! product-space construction's transfer properties.

mod common;

use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use common::{finite_diff_grad, l2_dist, l2_norm, random_quadratic, random_vec, rng};
use reshuffle_core::losses::QuadraticComponent;
use reshuffle_core::problem::{bregman_div, Problem, SmoothComponent};
use reshuffle_core::prox::{ElasticNet, ZeroRegularizer};
use reshuffle_core::reference::solve_reference;
use reshuffle_core::reformulate::{build_federated, importance_resample, resample_counts};

fn ill_conditioned_problem(seed: u64, n: usize, d: usize) -> Problem<f64> {
    let mut generator = rng(seed);
    let mut components: Vec<Arc<dyn SmoothComponent<f64>>> = Vec::new();
    // one stiff component, the rest mild
    components.push(Arc::new(random_quadratic(&mut generator, d, 30.0, 40.0, 1.0)));
    for _ in 1..n {
        components.push(Arc::new(random_quadratic(&mut generator, d, 0.5, 1.5, 1.0)));
    }
    Problem::new(components, Arc::new(ElasticNet::new(0.05, 0.3).unwrap())).unwrap()
}

#[test]
fn resampled_objective_is_the_scaled_original() {
    let problem = ill_conditioned_problem(5, 6, 3);
    let resampled = importance_resample(&problem).unwrap();
    let ratio = problem.n() as f64 / resampled.total() as f64;
    let mut generator = rng(6);
    for _ in 0..50 {
        let x = random_vec(&mut generator, 3, 3.0);
        let original = problem.objective(&x);
        let expanded = resampled.problem().objective(&x);
        // P_resampled = (n/N) P
        assert!(
            (expanded - ratio * original).abs() <= 1e-12 * (1.0 + original.abs()),
            "{expanded} vs {}",
            ratio * original
        );
        let smooth_orig = problem.smooth_value(&x);
        let smooth_exp = resampled.problem().smooth_value(&x);
        assert!((smooth_exp - ratio * smooth_orig).abs() <= 1e-12 * (1.0 + smooth_orig.abs()));
    }
}

#[test]
fn resampled_copies_are_at_most_mean_smooth() {
    let problem = ill_conditioned_problem(7, 9, 2);
    let constants = problem.smoothness_constants();
    let resampled = importance_resample(&problem).unwrap();
    assert!(resampled.total() <= 2 * problem.n());
    let expanded = resampled.problem().smoothness_constants();
    for &l in &expanded.per_component {
        assert!(l <= constants.l_bar + 1e-12, "copy smoothness {l} above {}", constants.l_bar);
    }
    // expansion order is deterministic: copies of component i are contiguous
    let counts = resampled.counts();
    let mut cursor = 0usize;
    for (i, &count) in counts.iter().enumerate() {
        let base = constants.per_component[i] / count as f64;
        for _ in 0..count {
            assert!((expanded.per_component[cursor] - base).abs() < 1e-12);
            cursor += 1;
        }
    }
}

#[test]
fn resampled_problem_has_the_same_minimizer() {
    let problem = ill_conditioned_problem(11, 5, 3);
    let resampled = importance_resample(&problem).unwrap();
    let a = solve_reference(&problem, 1e-11, 2_000_000).unwrap();
    let b = solve_reference(resampled.problem(), 1e-11, 2_000_000).unwrap();
    assert!(l2_dist(&a, &b) <= 1e-8, "minimizers differ by {}", l2_dist(&a, &b));
}

proptest! {
    #[test]
    fn duplication_total_is_at_most_double(
        smoothness in prop::collection::vec(1e-3f64..1e3, 1..40)
    ) {
        let counts = resample_counts(&smoothness).unwrap();
        let total: usize = counts.iter().sum();
        prop_assert!(total <= 2 * smoothness.len());
        prop_assert!(counts.iter().all(|&c| c >= 1));
    }
}

fn fed_fixture(seed: u64, sizes: &[usize], d: usize) -> reshuffle_core::FederatedProblem64 {
    let mut generator = rng(seed);
    let clients: Vec<Vec<Arc<dyn SmoothComponent<f64>>>> = sizes
        .iter()
        .map(|&size| {
            (0..size)
                .map(|_| {
                    Arc::new(random_quadratic(&mut generator, d, 0.8, 2.0, 1.5))
                        as Arc<dyn SmoothComponent<f64>>
                })
                .collect()
        })
        .collect();
    build_federated(clients, Arc::new(ElasticNet::new(0.02, 0.4).unwrap()), None).unwrap()
}

#[test]
fn stacked_gradients_match_finite_differences() {
    let fed = fed_fixture(13, &[3, 5], 2);
    let stacked = fed.stacked_problem().unwrap();
    let mut generator = rng(14);
    for i in 0..stacked.n() {
        let component = stacked.component(i);
        let x = random_vec(&mut generator, 4, 2.0);
        let analytic = component.gradient(&x);
        let numeric = finite_diff_grad(|p| component.value(p), &x, 1e-6);
        assert!(l2_dist(&analytic, &numeric) <= 1e-5 * (1.0 + l2_norm(&analytic)));
    }
}

#[test]
fn stacked_components_keep_their_smoothness_bounds() {
    let fed = fed_fixture(17, &[4, 4, 2], 2);
    let stacked = fed.stacked_problem().unwrap();
    let mut generator = rng(18);
    for i in 0..stacked.n() {
        let component = stacked.component(i);
        let l = component.smoothness();
        let lambda = component.strong_convexity();
        for _ in 0..300 {
            let x = random_vec(&mut generator, 6, 2.0);
            let y = random_vec(&mut generator, 6, 2.0);
            let div = bregman_div(component, &x, &y).unwrap();
            let gap = l2_dist(&x, &y).powi(2);
            assert!(div <= 0.5 * l * gap + 1e-8);
            assert!(div >= 0.5 * lambda * gap - 1e-8);
        }
    }
}

#[test]
fn federated_solution_transfers_to_the_pooled_problem() {
    let fed = fed_fixture(19, &[3, 4], 3);
    let tol = 1e-11;
    let pooled = fed.pooled_problem().unwrap();
    let pooled_star = solve_reference(&pooled, tol, 2_000_000).unwrap();

    let stacked = fed.stacked_problem().unwrap();
    let stacked_star = solve_reference(&stacked, tol, 2_000_000).unwrap();
    // consensus blocks both equal the pooled solution
    for block in stacked_star.chunks_exact(3) {
        assert!(l2_dist(block, &pooled_star) <= 10.0 * tol * (1.0 + l2_norm(&pooled_star)));
    }
}

#[test]
fn single_client_reduces_to_its_own_problem() {
    let mut generator = rng(23);
    let components: Vec<Arc<dyn SmoothComponent<f64>>> = (0..4)
        .map(|_| {
            Arc::new(random_quadratic(&mut generator, 2, 1.0, 2.0, 1.0))
                as Arc<dyn SmoothComponent<f64>>
        })
        .collect();
    let reg = ElasticNet::new(0.1, 0.2).unwrap();
    let fed = build_federated(vec![components.clone()], Arc::new(reg), None).unwrap();
    let stacked = fed.stacked_problem().unwrap();
    let plain = Problem::new(components, Arc::new(reg)).unwrap();
    let mut check = rng(24);
    for _ in 0..20 {
        let x = random_vec(&mut check, 2, 2.0);
        assert!((stacked.objective(&x) - plain.objective(&x)).abs() < 1e-14);
        for i in 0..4 {
            assert!(
                (stacked.component(i).value(&x) - plain.component(i).value(&x)).abs() < 1e-14
            );
        }
    }
    // the extended prox is the plain prox at M = 1
    let x = random_vec(&mut check, 2, 3.0);
    let a = stacked.regularizer().prox(&x, 0.7);
    let b = plain.regularizer().prox(&x, 0.7);
    assert_eq!(a, b);
}

#[test]
fn n_override_forces_common_slot_count() {
    let mut generator = rng(29);
    let clients: Vec<Vec<Arc<dyn SmoothComponent<f64>>>> = vec![
        vec![Arc::new(random_quadratic(&mut generator, 2, 1.0, 2.0, 1.0))],
        vec![Arc::new(random_quadratic(&mut generator, 2, 1.0, 2.0, 1.0))],
    ];
    let fed = build_federated(clients, Arc::new(ZeroRegularizer), Some(4)).unwrap();
    assert_eq!(fed.slots(), 4);
    assert_eq!(fed.client(0).len(), 4);
    assert_eq!(fed.total(), 2);

    let mut generator = rng(29);
    let clients: Vec<Vec<Arc<dyn SmoothComponent<f64>>>> = vec![
        vec![
            Arc::new(random_quadratic(&mut generator, 2, 1.0, 2.0, 1.0)),
            Arc::new(random_quadratic(&mut generator, 2, 1.0, 2.0, 1.0)),
        ],
    ];
    assert!(build_federated(clients, Arc::new(ZeroRegularizer), Some(1)).is_err());
}

#[test]
fn quadratic_generator_sanity() {
    // guard for the fixture itself: centered diagonal quadratics are PSD
    let mut generator = rng(31);
    let q: QuadraticComponent<f64> = random_quadratic(&mut generator, 3, 0.5, 2.0, 1.0);
    let x = random_vec(&mut generator, 3, 2.0);
    assert!(q.value(&x) >= -1e-12);
}
