//! Single-machine optimizers: reshuffling with an end-of-epoch prox, proximal
//! SGD, the per-step-prox reshuffling heuristic, and full proximal gradient
//! descent.

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::Problem;
use crate::rng::{uniform_index, substream, PermutationMode, PermutationStream, StreamPurpose};
use crate::scalar::{cast_usize, Scalar};
use crate::schedules::Schedule;
use crate::trace::{RunTrace, TraceBuilder, TraceOpts};

fn check_finite<S: Scalar>(x: &[S], epoch: usize, step: usize) -> Result<()> {
    if linalg::all_finite(x) {
        Ok(())
    } else {
        Err(Error::NonFinite { epoch, step })
    }
}

fn maybe_objective<S: Scalar>(problem: &Problem<S>, x: &[S], wants: bool) -> Option<S> {
    wants.then(|| problem.objective(x))
}

/// Reshuffling with a single prox per epoch.
///
/// Each epoch samples (or reuses) a permutation, takes `n` plain gradient
/// steps along it, and applies one prox with scale `gamma_t * n`: exactly
/// `T` prox calls and `n T` gradient calls.
pub fn prox_rr<S: Scalar>(
    problem: &Problem<S>,
    x0: &[S],
    schedule: &Schedule<S>,
    epochs: usize,
    mode: PermutationMode,
    seed: u64,
    opts: TraceOpts<'_, S>,
) -> Result<(Vec<S>, RunTrace<S>)> {
    if epochs == 0 {
        return Err(Error::invalid("epoch budget must be at least 1"));
    }
    let n = problem.n();
    let d = problem.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let stream = PermutationStream::new(seed, n, mode)?;
    let mut builder = TraceBuilder::new(opts);
    let mut x = x0.to_vec();
    let mut grad = vec![S::zero(); d];
    let (mut grad_calls, mut prox_calls) = (0u64, 0u64);
    builder.record(0, S::zero(), &x, maybe_objective(problem, &x, builder.wants_objective()), 0, 0);
    for t in 0..epochs {
        let gamma = schedule.epoch_stepsize(t)?;
        let perm = stream.permutation(t);
        for (i, &idx) in perm.iter().enumerate() {
            problem.component(idx).grad_into(&x, &mut grad);
            linalg::axpy(-gamma, &grad, &mut x);
            grad_calls += 1;
            check_finite(&x, t, i)?;
        }
        x = problem.regularizer().prox(&x, gamma * cast_usize::<S>(n));
        prox_calls += 1;
        check_finite(&x, t, n)?;
        builder.record(
            t + 1,
            gamma,
            &x,
            maybe_objective(problem, &x, builder.wants_objective()),
            grad_calls,
            prox_calls,
        );
    }
    Ok((x, builder.finish()))
}

/// Proximal SGD: uniform with-replacement sampling, one prox per step.
///
/// `stepsize(k)` supplies `gamma_k`. The trace records one row per data-pass
/// equivalent (`n` steps) plus a final partial pass if `steps % n != 0`.
pub fn prox_sgd<S: Scalar>(
    problem: &Problem<S>,
    x0: &[S],
    stepsize: impl Fn(usize) -> S,
    steps: usize,
    seed: u64,
    opts: TraceOpts<'_, S>,
) -> Result<(Vec<S>, RunTrace<S>)> {
    if steps == 0 {
        return Err(Error::invalid("step budget must be at least 1"));
    }
    let n = problem.n();
    let d = problem.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let mut index_rng = substream(seed, StreamPurpose::SgdIndex, 0);
    let mut builder = TraceBuilder::new(opts);
    let mut x = x0.to_vec();
    let mut grad = vec![S::zero(); d];
    let (mut grad_calls, mut prox_calls) = (0u64, 0u64);
    builder.record(0, S::zero(), &x, maybe_objective(problem, &x, builder.wants_objective()), 0, 0);
    let mut pass_stepsize = S::zero();
    for k in 0..steps {
        let gamma = stepsize(k);
        if !(gamma > S::zero()) {
            return Err(Error::invalid("stepsize must be positive"));
        }
        if k % n == 0 {
            pass_stepsize = gamma;
        }
        let idx = uniform_index(&mut index_rng, n);
        problem.component(idx).grad_into(&x, &mut grad);
        linalg::axpy(-gamma, &grad, &mut x);
        x = problem.regularizer().prox(&x, gamma);
        grad_calls += 1;
        prox_calls += 1;
        check_finite(&x, k / n, k % n)?;
        if (k + 1) % n == 0 || k + 1 == steps {
            builder.record(
                (k + 1).div_ceil(n),
                pass_stepsize,
                &x,
                maybe_objective(problem, &x, builder.wants_objective()),
                grad_calls,
                prox_calls,
            );
        }
    }
    Ok((x, builder.finish()))
}

/// Reshuffling with a prox after every inner step and none at the epoch end;
/// `n T` prox calls.
pub fn rr_heuristic<S: Scalar>(
    problem: &Problem<S>,
    x0: &[S],
    schedule: &Schedule<S>,
    epochs: usize,
    seed: u64,
    opts: TraceOpts<'_, S>,
) -> Result<(Vec<S>, RunTrace<S>)> {
    if epochs == 0 {
        return Err(Error::invalid("epoch budget must be at least 1"));
    }
    let n = problem.n();
    let d = problem.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let stream = PermutationStream::new(seed, n, PermutationMode::Reshuffle)?;
    let mut builder = TraceBuilder::new(opts);
    let mut x = x0.to_vec();
    let mut grad = vec![S::zero(); d];
    let (mut grad_calls, mut prox_calls) = (0u64, 0u64);
    builder.record(0, S::zero(), &x, maybe_objective(problem, &x, builder.wants_objective()), 0, 0);
    for t in 0..epochs {
        let gamma = schedule.epoch_stepsize(t)?;
        let perm = stream.permutation(t);
        for (i, &idx) in perm.iter().enumerate() {
            problem.component(idx).grad_into(&x, &mut grad);
            linalg::axpy(-gamma, &grad, &mut x);
            x = problem.regularizer().prox(&x, gamma);
            grad_calls += 1;
            prox_calls += 1;
            check_finite(&x, t, i)?;
        }
        builder.record(
            t + 1,
            gamma,
            &x,
            maybe_objective(problem, &x, builder.wants_objective()),
            grad_calls,
            prox_calls,
        );
    }
    Ok((x, builder.finish()))
}

/// Deterministic proximal gradient descent on the full objective.
pub fn prox_gd<S: Scalar>(
    problem: &Problem<S>,
    x0: &[S],
    gamma: S,
    steps: usize,
    opts: TraceOpts<'_, S>,
) -> Result<(Vec<S>, RunTrace<S>)> {
    if steps == 0 {
        return Err(Error::invalid("step budget must be at least 1"));
    }
    if !(gamma > S::zero()) {
        return Err(Error::invalid("stepsize must be positive"));
    }
    let d = problem.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let mut builder = TraceBuilder::new(opts);
    let mut x = x0.to_vec();
    let mut grad = vec![S::zero(); d];
    let mut scratch = vec![S::zero(); d];
    let (mut grad_calls, mut prox_calls) = (0u64, 0u64);
    builder.record(0, S::zero(), &x, maybe_objective(problem, &x, builder.wants_objective()), 0, 0);
    for k in 0..steps {
        problem.smooth_grad_into(&x, &mut grad, &mut scratch);
        linalg::axpy(-gamma, &grad, &mut x);
        x = problem.regularizer().prox(&x, gamma);
        grad_calls += problem.n() as u64;
        prox_calls += 1;
        check_finite(&x, k, 0)?;
        builder.record(
            k + 1,
            gamma,
            &x,
            maybe_objective(problem, &x, builder.wants_objective()),
            grad_calls,
            prox_calls,
        );
    }
    Ok((x, builder.finish()))
}
