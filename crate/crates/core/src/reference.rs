//! Deterministic full-gradient reference solver and the fixed-point
//! diagnostic built on the same proximal-gradient map.

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::Problem;
use crate::scalar::{cast, Scalar};

/// Default residual tolerance for reference solves.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default iteration cap for reference solves.
pub const DEFAULT_MAX_ITERS: usize = 2_000_000;

/// High-accuracy minimizer of `P = f + psi` by deterministic proximal
/// gradient descent from the origin.
///
/// Uses the fixed stepsize `gamma = 1 / (2 L_max)` and stops once the
/// prox-gradient residual `||x - prox_{gamma psi}(x - gamma grad f(x))||`
/// drops to `tol`; the returned point satisfies that inequality itself.
pub fn solve_reference<S: Scalar>(
    problem: &Problem<S>,
    tol: S,
    max_iters: usize,
) -> Result<Vec<S>> {
    let l_max = problem.l_max();
    if l_max <= S::zero() {
        return Err(Error::invalid("reference solve needs L_max > 0"));
    }
    let gamma = S::one() / (cast::<S>(2.0) * l_max);
    let d = problem.dim();
    let mut x = vec![S::zero(); d];
    let mut grad = vec![S::zero(); d];
    let mut scratch = vec![S::zero(); d];
    let mut step = vec![S::zero(); d];
    let mut residual = S::infinity();
    for _ in 0..max_iters {
        problem.smooth_grad_into(&x, &mut grad, &mut scratch);
        step.copy_from_slice(&x);
        linalg::axpy(-gamma, &grad, &mut step);
        let next = problem.regularizer().prox(&step, gamma);
        residual = linalg::dist_sq(&x, &next).sqrt();
        if !linalg::all_finite(&next) {
            return Err(Error::invalid("reference solve produced non-finite iterate"));
        }
        if residual <= tol {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::NoConvergence {
        iters: max_iters,
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}

/// Convenience wrapper with the default tolerance and iteration cap.
pub fn solve_reference_default<S: Scalar>(problem: &Problem<S>) -> Result<Vec<S>> {
    solve_reference(problem, cast::<S>(DEFAULT_TOL), DEFAULT_MAX_ITERS)
}

/// Prox-gradient fixed-point residual
/// `||x - prox_{gamma b psi}(x - gamma b grad f(x))||`.
///
/// A point minimizes `P` exactly when this vanishes, and it does so for
/// every positive scale `gamma * b`; passing `b = n` reproduces the
/// end-of-epoch operator of the reshuffling methods.
pub fn check_fixed_point<S: Scalar>(problem: &Problem<S>, x: &[S], gamma: S, b: S) -> S {
    assert!(gamma > S::zero() && b > S::zero(), "scales must be positive");
    assert_eq!(x.len(), problem.dim());
    let scale = gamma * b;
    let grad = problem.smooth_gradient(x);
    let mut shifted = x.to_vec();
    linalg::axpy(-scale, &grad, &mut shifted);
    let mapped = problem.regularizer().prox(&shifted, scale);
    linalg::dist_sq(x, &mapped).sqrt()
}
