//! Problem-to-problem transformations: importance resampling by component
//! duplication, and the product-space construction behind the federated
//! methods.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::losses::{ScaledComponent, ZeroComponent};
use crate::problem::{Problem, Regularizer, SmoothComponent};
use crate::prox::{ConsensusRegularizer, ScaledRegularizer};
use crate::scalar::{cast_usize, Scalar};

/// Result of importance resampling: component `i` appears
/// `n_i = ceil(L_i / L_bar)` times as the copy `(1/n_i) f_i`, so every copy
/// is at most `L_bar`-smooth and the total count satisfies `N <= 2n`.
///
/// The regularizer of the expanded problem is `(n/N) psi`, which makes the
/// expanded objective exactly `(n/N)` times the original one; minimizers are
/// unchanged.
pub struct ResampledProblem<S: Scalar> {
    problem: Problem<S>,
    counts: Vec<usize>,
    total: usize,
}

impl<S: Scalar> ResampledProblem<S> {
    pub fn problem(&self) -> &Problem<S> {
        &self.problem
    }

    /// Duplication count `n_i` per base component.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of expanded copies `N`.
    pub fn total(&self) -> usize {
        self.total
    }
}

/// Duplication counts `ceil(L_i / L_bar)` for a smoothness profile.
pub fn resample_counts<S: Scalar>(smoothness: &[S]) -> Result<Vec<usize>> {
    if smoothness.is_empty() {
        return Err(Error::invalid("need at least one smoothness constant"));
    }
    if smoothness.iter().any(|l| !(*l > S::zero())) {
        return Err(Error::invalid("importance resampling needs every L_i > 0"));
    }
    let l_bar = smoothness.iter().copied().sum::<S>() / cast_usize::<S>(smoothness.len());
    Ok(smoothness
        .iter()
        .map(|&l| {
            let ratio = (l / l_bar).to_f64().expect("finite ratio");
            ratio.ceil() as usize
        })
        .collect())
}

/// Expands a problem by duplicating each component `ceil(L_i / L_bar)` times
/// with `1/n_i` scaling; copy order is deterministic (all copies of component
/// 0 first, then component 1, and so on).
pub fn importance_resample<S: Scalar>(problem: &Problem<S>) -> Result<ResampledProblem<S>> {
    let constants = problem.smoothness_constants();
    let counts = resample_counts(&constants.per_component)?;
    let total: usize = counts.iter().sum();
    let mut components: Vec<Arc<dyn SmoothComponent<S>>> = Vec::with_capacity(total);
    for (component, &count) in problem.components().iter().zip(&counts) {
        let factor = S::one() / cast_usize::<S>(count);
        for _ in 0..count {
            components.push(Arc::new(ScaledComponent::new(Arc::clone(component), factor)));
        }
    }
    let reg_factor = cast_usize::<S>(problem.n()) / cast_usize::<S>(total);
    let regularizer: Arc<dyn Regularizer<S>> =
        Arc::new(ScaledRegularizer::new(problem.regularizer_arc(), reg_factor)?);
    Ok(ResampledProblem { problem: Problem::new(components, regularizer)?, counts, total })
}

/// Extended component `f_i(x_1, .., x_M) = sum_m f_{m,i}(x_m)` acting on the
/// stacked space; the gradient is blockwise.
pub struct StackedComponent<S: Scalar> {
    parts: Vec<Arc<dyn SmoothComponent<S>>>,
    block_dim: usize,
}

impl<S: Scalar> StackedComponent<S> {
    pub fn new(parts: Vec<Arc<dyn SmoothComponent<S>>>, block_dim: usize) -> Self {
        debug_assert!(parts.iter().all(|p| p.dim() == block_dim));
        StackedComponent { parts, block_dim }
    }
}

impl<S: Scalar> SmoothComponent<S> for StackedComponent<S> {
    fn dim(&self) -> usize {
        self.parts.len() * self.block_dim
    }

    fn value(&self, x: &[S]) -> S {
        let mut acc = S::zero();
        for (m, part) in self.parts.iter().enumerate() {
            acc += part.value(&x[m * self.block_dim..(m + 1) * self.block_dim]);
        }
        acc
    }

    fn grad_into(&self, x: &[S], out: &mut [S]) {
        for (m, part) in self.parts.iter().enumerate() {
            let range = m * self.block_dim..(m + 1) * self.block_dim;
            part.grad_into(&x[range.clone()], &mut out[range]);
        }
    }

    fn smoothness(&self) -> S {
        // block-diagonal structure: the largest per-block constant
        self.parts.iter().map(|p| p.smoothness()).fold(S::zero(), S::max)
    }

    fn strong_convexity(&self) -> S {
        self.parts
            .iter()
            .map(|p| p.strong_convexity())
            .fold(S::infinity(), S::min)
    }
}

/// `M` clients with per-client component lists, zero-padded to a common
/// length `n`, together with the shared regularizer `R`.
pub struct FederatedProblem<S: Scalar> {
    clients: Vec<Vec<Arc<dyn SmoothComponent<S>>>>,
    client_sizes: Vec<usize>,
    regularizer: Arc<dyn Regularizer<S>>,
    dim: usize,
    slots: usize,
    total: usize,
}

/// Builds the product-space problem: each client list is padded with zero
/// components up to `n = max_m N_m` (or `n_override`), and the extended
/// regularizer is `(N/n)(R + consensus)`.
pub fn build_federated<S: Scalar>(
    clients: Vec<Vec<Arc<dyn SmoothComponent<S>>>>,
    regularizer: Arc<dyn Regularizer<S>>,
    n_override: Option<usize>,
) -> Result<FederatedProblem<S>> {
    if clients.is_empty() {
        return Err(Error::invalid("need at least one client"));
    }
    if clients.iter().any(|c| c.is_empty()) {
        return Err(Error::invalid("every client needs at least one component"));
    }
    let dim = clients[0][0].dim();
    for (m, client) in clients.iter().enumerate() {
        for c in client {
            if c.dim() != dim {
                return Err(Error::invalid(format!(
                    "client {m} has a component of dim {}, expected {dim}",
                    c.dim()
                )));
            }
        }
    }
    let client_sizes: Vec<usize> = clients.iter().map(Vec::len).collect();
    let max_size = *client_sizes.iter().max().expect("nonempty");
    let slots = n_override.unwrap_or(max_size);
    if slots < max_size {
        return Err(Error::invalid(format!(
            "slot override {slots} below largest client size {max_size}"
        )));
    }
    let total: usize = client_sizes.iter().sum();
    let mut padded = clients;
    for client in &mut padded {
        while client.len() < slots {
            client.push(Arc::new(ZeroComponent::new(dim)));
        }
    }
    Ok(FederatedProblem { clients: padded, client_sizes, regularizer, dim, slots, total })
}

impl<S: Scalar> FederatedProblem<S> {
    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    /// Common padded length `n`.
    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Total component count `N` over all clients (before padding).
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Original per-client sizes `N_m`.
    pub fn client_sizes(&self) -> &[usize] {
        &self.client_sizes
    }

    /// Padded component list of client `m`.
    pub fn client(&self, m: usize) -> &[Arc<dyn SmoothComponent<S>>] {
        &self.clients[m]
    }

    pub fn regularizer(&self) -> &dyn Regularizer<S> {
        self.regularizer.as_ref()
    }

    pub fn regularizer_arc(&self) -> Arc<dyn Regularizer<S>> {
        Arc::clone(&self.regularizer)
    }

    /// `N / n`, the normalization carried by the extended regularizer.
    pub fn scale_factor(&self) -> S {
        cast_usize::<S>(self.total) / cast_usize::<S>(self.slots)
    }

    /// Largest smoothness constant over all real components.
    pub fn l_max(&self) -> S {
        self.clients
            .iter()
            .flatten()
            .map(|c| c.smoothness())
            .fold(S::zero(), S::max)
    }

    /// The stacked single-machine problem on `R^{M d}` whose reshuffling
    /// trajectory reproduces the federated method.
    pub fn stacked_problem(&self) -> Result<Problem<S>> {
        let m = self.num_clients();
        let mut components: Vec<Arc<dyn SmoothComponent<S>>> = Vec::with_capacity(self.slots);
        for slot in 0..self.slots {
            let parts: Vec<Arc<dyn SmoothComponent<S>>> =
                (0..m).map(|client| Arc::clone(&self.clients[client][slot])).collect();
            components.push(Arc::new(StackedComponent::new(parts, self.dim)));
        }
        let regularizer: Arc<dyn Regularizer<S>> = Arc::new(ConsensusRegularizer::new(
            Arc::clone(&self.regularizer),
            m,
            self.dim,
            self.scale_factor(),
        )?);
        Problem::new(components, regularizer)
    }

    /// The pooled single-machine problem `(1/N) sum_{m,j} f_{mj} + R`; its
    /// minimizer is the consensus solution of the federated problem.
    pub fn pooled_problem(&self) -> Result<Problem<S>> {
        let mut components: Vec<Arc<dyn SmoothComponent<S>>> = Vec::with_capacity(self.total);
        for (client, &size) in self.clients.iter().zip(&self.client_sizes) {
            for component in &client[..size] {
                components.push(Arc::clone(component));
            }
        }
        Problem::new(components, Arc::clone(&self.regularizer))
    }

    /// Original federated objective `(1/N) sum_m F_m(x) + R(x)` at a
    /// consensus point `x` of the client dimension.
    pub fn consensus_objective(&self, x: &[S]) -> S {
        let mut acc = S::zero();
        for client in &self.clients {
            for component in client {
                acc += component.value(x);
            }
        }
        acc / cast_usize::<S>(self.total) + self.regularizer.value(x)
    }

    /// `grad F_m(x) = sum_j grad f_{mj}(x)` for client `m`.
    pub fn client_grad(&self, m: usize, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        let mut scratch = vec![S::zero(); self.dim];
        for component in &self.clients[m] {
            component.grad_into(x, &mut scratch);
            for (o, &g) in out.iter_mut().zip(&scratch) {
                *o += g;
            }
        }
        out
    }
}
