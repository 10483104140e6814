//! Per-epoch run metrics: distances to the optimum, objective values and
//! oracle-call counters.

use crate::linalg;
use crate::scalar::Scalar;

/// One completed epoch (or data pass); record 0 describes the initial point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<S> {
    pub epoch: usize,
    /// Stepsize used during the epoch; zero on the initial record.
    pub stepsize: S,
    /// `||x_t - x_*||^2` when a reference point was supplied.
    pub dist_sq: Option<S>,
    /// Composite objective `P(x_t)` when requested.
    pub objective: Option<S>,
    /// Cumulative gradient-oracle calls.
    pub grad_calls: u64,
    /// Cumulative proximal-operator calls.
    pub prox_calls: u64,
}

/// Per-client inner-step counters for federated runs; padded slots hold
/// zero components and are counted separately from real data steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClientSteps {
    pub real: u64,
    pub padded: u64,
}

/// Metrics collected over a run, one record per completed epoch.
#[derive(Debug, Clone, Default)]
pub struct RunTrace<S> {
    pub records: Vec<TraceRecord<S>>,
    /// End-of-epoch iterates (including the initial point) when requested.
    pub iterates: Option<Vec<Vec<S>>>,
    /// Filled by federated runs.
    pub client_steps: Option<Vec<ClientSteps>>,
}

impl<S: Scalar> RunTrace<S> {
    pub fn final_record(&self) -> &TraceRecord<S> {
        self.records.last().expect("trace has at least the initial record")
    }

    pub fn final_dist_sq(&self) -> Option<S> {
        self.final_record().dist_sq
    }
}

/// What to record while an optimizer runs.
#[derive(Debug, Clone, Copy)]
pub struct TraceOpts<'a, S> {
    /// Reference solution for the distance column.
    pub x_star: Option<&'a [S]>,
    /// Record the composite objective (costs one pass over the data per epoch).
    pub record_objective: bool,
    /// Keep every end-of-epoch iterate in the trace.
    pub keep_iterates: bool,
}

impl<S> Default for TraceOpts<'_, S> {
    fn default() -> Self {
        TraceOpts { x_star: None, record_objective: true, keep_iterates: false }
    }
}

impl<'a, S: Scalar> TraceOpts<'a, S> {
    pub fn with_x_star(x_star: &'a [S]) -> Self {
        TraceOpts { x_star: Some(x_star), ..Default::default() }
    }

    /// Distances only; cheapest option for large seed sweeps.
    pub fn distances_only(x_star: &'a [S]) -> Self {
        TraceOpts { x_star: Some(x_star), record_objective: false, keep_iterates: false }
    }

    pub(crate) fn dist_sq(&self, x: &[S]) -> Option<S> {
        self.x_star.map(|xs| linalg::dist_sq(x, xs))
    }
}

/// Incremental trace builder shared by the optimizers.
pub(crate) struct TraceBuilder<'a, S: Scalar> {
    opts: TraceOpts<'a, S>,
    trace: RunTrace<S>,
}

impl<'a, S: Scalar> TraceBuilder<'a, S> {
    pub fn new(opts: TraceOpts<'a, S>) -> Self {
        let trace = RunTrace {
            records: Vec::new(),
            iterates: if opts.keep_iterates { Some(Vec::new()) } else { None },
            client_steps: None,
        };
        TraceBuilder { opts, trace }
    }

    pub fn record(
        &mut self,
        epoch: usize,
        stepsize: S,
        x: &[S],
        objective: Option<S>,
        grad_calls: u64,
        prox_calls: u64,
    ) {
        self.trace.records.push(TraceRecord {
            epoch,
            stepsize,
            dist_sq: self.opts.dist_sq(x),
            objective,
            grad_calls,
            prox_calls,
        });
        if let Some(iterates) = &mut self.trace.iterates {
            iterates.push(x.to_vec());
        }
    }

    pub fn wants_objective(&self) -> bool {
        self.opts.record_objective
    }

    pub fn finish(self) -> RunTrace<S> {
        self.trace
    }

    pub fn finish_with_clients(mut self, clients: Vec<ClientSteps>) -> RunTrace<S> {
        self.trace.client_steps = Some(clients);
        self.trace
    }
}
