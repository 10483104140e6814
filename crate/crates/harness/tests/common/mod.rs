//! Instance generators shared by the acceptance criteria.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use reshuffle_core::losses::{LogisticComponent, QuadraticComponent};
use reshuffle_core::problem::{Problem, SmoothComponent};
use reshuffle_core::prox::{ElasticNet, ZeroRegularizer};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale).collect()
}

pub fn l2_dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Random diagonal quadratic with eigenvalues in `[lo, hi]` centered at a
/// random point of the given scale.
pub fn random_quadratic(
    rng: &mut ChaCha8Rng,
    d: usize,
    lo: f64,
    hi: f64,
    center_scale: f64,
) -> Arc<dyn SmoothComponent<f64>> {
    let diag: Vec<f64> = (0..d).map(|_| lo + rng.random::<f64>() * (hi - lo)).collect();
    let center = random_vec(rng, d, center_scale);
    Arc::new(QuadraticComponent::centered_diagonal(diag, &center))
}

pub fn quadratic_problem(
    seed: u64,
    n: usize,
    d: usize,
    lo: f64,
    hi: f64,
    center_scale: f64,
    l1: f64,
    l2: f64,
) -> Problem<f64> {
    let mut generator = rng(seed);
    let components: Vec<Arc<dyn SmoothComponent<f64>>> =
        (0..n).map(|_| random_quadratic(&mut generator, d, lo, hi, center_scale)).collect();
    if l1 == 0.0 && l2 == 0.0 {
        Problem::new(components, Arc::new(ZeroRegularizer)).unwrap()
    } else {
        Problem::new(components, Arc::new(ElasticNet::new(l1, l2).unwrap())).unwrap()
    }
}

/// Quadratics that are merely convex: each diagonal carries at least one
/// zero eigenvalue, so the strong convexity lives in the regularizer alone.
pub fn convex_quadratic_problem(
    seed: u64,
    n: usize,
    d: usize,
    hi: f64,
    center_scale: f64,
    l1: f64,
    l2: f64,
) -> Problem<f64> {
    let mut generator = rng(seed);
    let components: Vec<Arc<dyn SmoothComponent<f64>>> = (0..n)
        .map(|_| {
            let mut diag: Vec<f64> = (0..d).map(|_| generator.random::<f64>() * hi).collect();
            let zero_at = generator.random_range(0..d);
            diag[zero_at] = 0.0;
            let center = random_vec(&mut generator, d, center_scale);
            Arc::new(QuadraticComponent::centered_diagonal(diag, &center))
                as Arc<dyn SmoothComponent<f64>>
        })
        .collect();
    Problem::new(components, Arc::new(ElasticNet::new(l1, l2).unwrap())).unwrap()
}

pub fn logistic_problem(
    seed: u64,
    n: usize,
    d: usize,
    in_loss_l2: f64,
    l1: f64,
    l2: f64,
) -> Problem<f64> {
    let mut generator = rng(seed);
    let components: Vec<Arc<dyn SmoothComponent<f64>>> = (0..n)
        .map(|_| {
            let features = random_vec(&mut generator, d, 1.5);
            let label = generator.random::<f64>() < 0.5;
            Arc::new(LogisticComponent::from_dense(&features, label, in_loss_l2).unwrap())
                as Arc<dyn SmoothComponent<f64>>
        })
        .collect();
    Problem::new(components, Arc::new(ElasticNet::new(l1, l2).unwrap())).unwrap()
}
