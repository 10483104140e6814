//! Federated reshuffling: local epochs on simulated clients, averaging, and
//! one server-side prox per round.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::reformulate::FederatedProblem;
use crate::rng::{PermutationMode, PermutationStream};
use crate::scalar::{cast_usize, Scalar};
use crate::schedules::Schedule;
use crate::trace::{ClientSteps, RunTrace, TraceBuilder, TraceOpts};

/// Execution options for [`fed_rr`].
#[derive(Debug, Clone, Copy)]
pub struct FedOptions {
    /// Run client epochs on the rayon pool; results are bitwise identical to
    /// the serial path because aggregation always sums in client order.
    pub parallel: bool,
    /// Make every client reuse the slot permutation of client 0. This is the
    /// convention under which the federated method coincides with the
    /// reshuffling method on the stacked problem; the default is independent
    /// per-client permutations.
    pub synchronized_permutations: bool,
}

impl Default for FedOptions {
    fn default() -> Self {
        FedOptions { parallel: false, synchronized_permutations: false }
    }
}

struct ClientState<S: Scalar> {
    id: usize,
    stream: PermutationStream,
    steps: ClientSteps,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> ClientState<S> {
    /// One local epoch from the broadcast point; returns the local endpoint.
    fn run_epoch(
        &self,
        fed: &FederatedProblem<S>,
        start: &[S],
        gamma: S,
        epoch: usize,
    ) -> Result<(Vec<S>, ClientSteps)> {
        let mut x = start.to_vec();
        let mut grad = vec![S::zero(); fed.dim()];
        let mut steps = ClientSteps { real: 0, padded: 0 };
        let real_count = fed.client_sizes()[self.id];
        let perm = self.stream.permutation(epoch);
        for (i, &slot) in perm.iter().enumerate() {
            fed.client(self.id)[slot].grad_into(&x, &mut grad);
            linalg::axpy(-gamma, &grad, &mut x);
            if slot < real_count {
                steps.real += 1;
            } else {
                steps.padded += 1;
            }
            if !linalg::all_finite(&x) {
                return Err(Error::ClientNonFinite { client: self.id, epoch, step: i });
            }
        }
        Ok((x, steps))
    }
}

/// Federated reshuffling (Shuffle-Once with [`PermutationMode::ShuffleOnce`]).
///
/// Each epoch every client runs a full local pass over its `n` padded slots
/// under its own permutation, the server averages the endpoints and applies
/// `prox_{gamma (N/M) R}`: exactly `T` server prox calls. Client `m` draws
/// its permutations from the substream indexed by `(m, epoch)`, so client 0
/// reproduces the single-machine stream and the run is bitwise reproducible.
pub fn fed_rr<S: Scalar>(
    fed: &FederatedProblem<S>,
    x0: &[S],
    schedule: &Schedule<S>,
    epochs: usize,
    mode: PermutationMode,
    seed: u64,
    options: FedOptions,
    opts: TraceOpts<'_, S>,
) -> Result<(Vec<S>, RunTrace<S>)> {
    if epochs == 0 {
        return Err(Error::invalid("epoch budget must be at least 1"));
    }
    let d = fed.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let m = fed.num_clients();
    let clients: Vec<ClientState<S>> = (0..m)
        .map(|id| {
            let stream_id = if options.synchronized_permutations { 0 } else { id as u32 };
            Ok(ClientState {
                id,
                stream: PermutationStream::for_client(seed, fed.slots(), mode, stream_id)?,
                steps: ClientSteps { real: 0, padded: 0 },
                _marker: std::marker::PhantomData,
            })
        })
        .collect::<Result<_>>()?;
    let mut client_totals: Vec<ClientSteps> = clients.iter().map(|c| c.steps).collect();

    let server_scale = cast_usize::<S>(fed.total()) / cast_usize::<S>(m);
    let mut builder = TraceBuilder::new(opts);
    let mut x = x0.to_vec();
    let (mut grad_calls, mut prox_calls) = (0u64, 0u64);
    let objective =
        |x: &[S], wants: bool| -> Option<S> { wants.then(|| fed.consensus_objective(x)) };
    builder.record(0, S::zero(), &x, objective(&x, builder.wants_objective()), 0, 0);

    for t in 0..epochs {
        let gamma = schedule.epoch_stepsize(t)?;
        let run = |client: &ClientState<S>| client.run_epoch(fed, &x, gamma, t);
        let outcomes: Vec<Result<(Vec<S>, ClientSteps)>> = if options.parallel {
            clients.par_iter().map(run).collect()
        } else {
            clients.iter().map(run).collect()
        };
        let mut endpoints = Vec::with_capacity(m);
        for (id, outcome) in outcomes.into_iter().enumerate() {
            let (endpoint, steps) = outcome?;
            client_totals[id].real += steps.real;
            client_totals[id].padded += steps.padded;
            grad_calls += (steps.real + steps.padded) as u64;
            endpoints.push(endpoint);
        }
        let averaged = linalg::pairwise_mean(&endpoints);
        x = fed.regularizer().prox(&averaged, gamma * server_scale);
        prox_calls += 1;
        if !linalg::all_finite(&x) {
            return Err(Error::NonFinite { epoch: t, step: fed.slots() });
        }
        builder.record(
            t + 1,
            gamma,
            &x,
            objective(&x, builder.wants_objective()),
            grad_calls,
            prox_calls,
        );
    }
    Ok((x, builder.finish_with_clients(client_totals)))
}

/// Verifies that the federated method is the reshuffling method applied to
/// the stacked product-space problem.
///
/// Runs both trajectories for `epochs` epochs — the federated one under the
/// synchronized-permutation convention when `synchronized` is true, under
/// independent per-client permutations otherwise — and reports whether every
/// per-epoch iterate agrees blockwise within `1e-12`. Desynchronized
/// permutations serve as the negative control.
pub fn equivalence_check<S: Scalar>(
    fed: &FederatedProblem<S>,
    x0: &[S],
    gamma: S,
    epochs: usize,
    seed: u64,
    synchronized: bool,
) -> Result<bool> {
    let d = fed.dim();
    let m = fed.num_clients();
    let options = FedOptions { parallel: false, synchronized_permutations: synchronized };
    let fed_opts = TraceOpts { x_star: None, record_objective: false, keep_iterates: true };
    let (_, fed_trace) = fed_rr(
        fed,
        x0,
        &Schedule::Constant(gamma),
        epochs,
        PermutationMode::Reshuffle,
        seed,
        options,
        fed_opts,
    )?;

    let stacked = fed.stacked_problem()?;
    let mut stacked_x0 = Vec::with_capacity(m * d);
    for _ in 0..m {
        stacked_x0.extend_from_slice(x0);
    }
    let stacked_opts = TraceOpts { x_star: None, record_objective: false, keep_iterates: true };
    let (_, stacked_trace) = crate::algorithms::prox_rr(
        &stacked,
        &stacked_x0,
        &Schedule::Constant(gamma),
        epochs,
        PermutationMode::Reshuffle,
        seed,
        stacked_opts,
    )?;

    let fed_iterates = fed_trace.iterates.expect("requested iterates");
    let stacked_iterates = stacked_trace.iterates.expect("requested iterates");
    let tol = crate::scalar::cast::<S>(1e-12);
    for (fed_x, stacked_x) in fed_iterates.iter().zip(&stacked_iterates) {
        for block in 0..m {
            let chunk = &stacked_x[block * d..(block + 1) * d];
            for (a, b) in fed_x.iter().zip(chunk) {
                if (*a - *b).abs() > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
