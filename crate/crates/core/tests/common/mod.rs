//! Shared helpers for the integration tests: independent numeric oracles
//! (finite differences, dense linear solve, 1-D prox search) and random
//! instance generators. Nothing here calls into the code paths it checks.

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

/// Central finite-difference gradient of a value oracle.
pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let step = h * x[j].abs().max(1.0);
        probe[j] = x[j] + step;
        let plus = f(&probe);
        probe[j] = x[j] - step;
        let minus = f(&probe);
        probe[j] = x[j];
        grad[j] = (plus - minus) / (2.0 * step);
    }
    grad
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn l2_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense linear solve by Gaussian elimination with partial pivoting.
pub fn solve_linear(matrix: &[f64], rhs: &[f64]) -> Vec<f64> {
    let d = rhs.len();
    assert_eq!(matrix.len(), d * d);
    let mut a = matrix.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&i, &j| a[i * d + col].abs().partial_cmp(&a[j * d + col].abs()).unwrap())
            .unwrap();
        assert!(a[pivot * d + col].abs() > 1e-14, "singular system");
        if pivot != col {
            for k in 0..d {
                a.swap(col * d + k, pivot * d + k);
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..d {
            let factor = a[row * d + col] / a[col * d + col];
            for k in col..d {
                a[row * d + k] -= factor * a[col * d + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; d];
    for row in (0..d).rev() {
        let mut acc = b[row];
        for k in (row + 1)..d {
            acc -= a[row * d + k] * x[k];
        }
        x[row] = acc / a[row * d + row];
    }
    x
}

/// Minimizes a convex 1-D function by ternary search on `[lo, hi]`.
pub fn ternary_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    for _ in 0..iters {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

/// Random diagonal quadratic component with eigenvalues in `[lambda_lo, lambda_hi]`
/// centered at a random point.
pub fn random_quadratic(
    rng: &mut ChaCha8Rng,
    d: usize,
    lambda_lo: f64,
    lambda_hi: f64,
    center_scale: f64,
) -> QuadraticComponent<f64> {
    let diag: Vec<f64> =
        (0..d).map(|_| lambda_lo + rng.random::<f64>() * (lambda_hi - lambda_lo)).collect();
    let center = random_vec(rng, d, center_scale);
    QuadraticComponent::centered_diagonal(diag, &center)
}

/// Problem made of `n` random strongly convex quadratics and the given
/// elastic-net coefficients.
pub fn random_quadratic_problem(
    seed: u64,
    n: usize,
    d: usize,
    lambda_lo: f64,
    lambda_hi: f64,
    l1: f64,
    l2: f64,
) -> Problem<f64> {
    let mut generator = rng(seed);
    let components: Vec<Arc<dyn SmoothComponent<f64>>> = (0..n)
        .map(|_| {
            Arc::new(random_quadratic(&mut generator, d, lambda_lo, lambda_hi, 2.0))
                as Arc<dyn SmoothComponent<f64>>
        })
        .collect();
    if l1 == 0.0 && l2 == 0.0 {
        Problem::new(components, Arc::new(ZeroRegularizer)).unwrap()
    } else {
        Problem::new(components, Arc::new(ElasticNet::new(l1, l2).unwrap())).unwrap()
    }
}

/// Random sparse-ish logistic problem with an elastic-net regularizer.
pub fn random_logistic_problem(
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
