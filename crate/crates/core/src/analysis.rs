//! Diagnostic quantities for shuffling methods: gradient variance at the
//! optimum, intermediate limit points, the shuffling radius (sampled or
//! enumerated, plus its closed-form upper bound), without-replacement
//! sampling statistics, and evaluators for the convergence guarantees.

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::Problem;
use crate::reformulate::FederatedProblem;
use crate::rng::{random_permutation, substream, StreamPurpose};
use crate::scalar::{cast, cast_usize, Scalar};

/// Population variance of the component gradients at `x_star`:
/// `(1/n) sum_i ||grad f_i(x*) - grad f(x*)||^2`.
pub fn variance_at_opt<S: Scalar>(problem: &Problem<S>, x_star: &[S]) -> S {
    let mean = problem.smooth_gradient(x_star);
    let mut grad = vec![S::zero(); problem.dim()];
    let mut acc = S::zero();
    for component in problem.components() {
        component.grad_into(x_star, &mut grad);
        acc += linalg::dist_sq(&grad, &mean);
    }
    acc / cast_usize::<S>(problem.n())
}

/// Intermediate limit points `x_*^i = x_* - gamma * sum_{j<i} grad f_{pi_j}(x_*)`
/// for `i = 0..=n`; the inner iterates of a reshuffling epoch orbit these.
pub fn limit_points<S: Scalar>(
    problem: &Problem<S>,
    x_star: &[S],
    gamma: S,
    permutation: &[usize],
) -> Vec<Vec<S>> {
    let n = problem.n();
    assert_eq!(permutation.len(), n);
    let mut points = Vec::with_capacity(n + 1);
    let mut current = x_star.to_vec();
    points.push(current.clone());
    let mut grad = vec![S::zero(); problem.dim()];
    for &idx in permutation {
        problem.component(idx).grad_into(x_star, &mut grad);
        linalg::axpy(-gamma, &grad, &mut current);
        points.push(current.clone());
    }
    points
}

/// Shuffling-radius estimate: the per-index expectations
/// `E_pi[D_{f_{pi_i}}(x_*^i, x_*)] / gamma^2` and their maximum.
#[derive(Debug, Clone)]
pub struct RadiusEstimate<S> {
    /// `max_i` of the per-index expectations, divided by `gamma^2`.
    pub value: S,
    /// Per-index values for `i = 1..n-1`.
    pub per_index: Vec<S>,
    /// Standard error of the mean at the maximizing index (sampling mode).
    pub std_error: Option<S>,
    /// Whether the expectation was enumerated exactly.
    pub exact: bool,
}

/// Visits all permutations of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    fn generate(k: usize, items: &mut [usize], visit: &mut impl FnMut(&[usize])) {
        if k <= 1 {
            visit(items);
            return;
        }
        for i in 0..(k - 1) {
            generate(k - 1, items, visit);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
        generate(k - 1, items, visit);
    }
    let mut items: Vec<usize> = (0..n).collect();
    generate(n, &mut items, &mut visit);
}

fn factorial_guard(n: usize) -> Result<u64> {
    if n > 10 {
        return Err(Error::invalid(format!(
            "exact enumeration over {n}! permutations is not tractable (limit n <= 10)"
        )));
    }
    Ok((1..=n as u64).product::<u64>().max(1))
}

struct RadiusAccumulator<S: Scalar> {
    grads: Vec<Vec<S>>,
    values_at_star: Vec<S>,
    sums: Vec<S>,
    sums_sq: Vec<S>,
    count: u64,
}

impl<S: Scalar> RadiusAccumulator<S> {
    fn new(problem: &Problem<S>, x_star: &[S]) -> Self {
        let grads: Vec<Vec<S>> =
            problem.components().iter().map(|c| c.gradient(x_star)).collect();
        let values_at_star: Vec<S> =
            problem.components().iter().map(|c| c.value(x_star)).collect();
        let n = problem.n();
        RadiusAccumulator {
            grads,
            values_at_star,
            sums: vec![S::zero(); n],
            sums_sq: vec![S::zero(); n],
            count: 0,
        }
    }

    /// Adds the Bregman terms of one permutation for every interior index.
    fn visit(&mut self, problem: &Problem<S>, x_star: &[S], gamma: S, perm: &[usize]) {
        let n = perm.len();
        let mut point = x_star.to_vec();
        // interior indices i = 1..n-1: point holds x_*^i after the update
        for i in 1..n {
            linalg::axpy(-gamma, &self.grads[perm[i - 1]], &mut point);
            let idx = perm[i];
            let component = problem.component(idx);
            // D(x_*^i, x_*) = f(x_*^i) - f(x_*) - <grad f(x_*), x_*^i - x_*>
            let mut inner = S::zero();
            for (g, (p, s)) in self.grads[idx].iter().zip(point.iter().zip(x_star)) {
                inner += *g * (*p - *s);
            }
            let bregman = component.value(&point) - self.values_at_star[idx] - inner;
            self.sums[i] += bregman;
            self.sums_sq[i] += bregman * bregman;
        }
        self.count += 1;
    }

    fn finish(self, gamma: S, exact: bool) -> RadiusEstimate<S> {
        let n = self.sums.len();
        if n <= 1 {
            return RadiusEstimate {
                value: S::zero(),
                per_index: Vec::new(),
                std_error: None,
                exact,
            };
        }
        let count = S::from_u64(self.count).expect("count fits scalar");
        let gamma_sq = gamma * gamma;
        let per_index: Vec<S> =
            (1..n).map(|i| self.sums[i] / count / gamma_sq).collect();
        let (mut best, mut best_i) = (S::neg_infinity(), 1usize);
        for (offset, &v) in per_index.iter().enumerate() {
            if v > best {
                best = v;
                best_i = offset + 1;
            }
        }
        let std_error = if exact {
            None
        } else {
            let mean = self.sums[best_i] / count;
            let var = (self.sums_sq[best_i] / count - mean * mean).max(S::zero());
            Some((var / count).sqrt() / gamma_sq)
        };
        RadiusEstimate { value: best, per_index, std_error, exact }
    }
}

/// Exact shuffling radius by enumerating all `n!` permutations (`n <= 10`).
pub fn shuffling_radius_exact<S: Scalar>(
    problem: &Problem<S>,
    x_star: &[S],
    gamma: S,
) -> Result<RadiusEstimate<S>> {
    if !(gamma > S::zero()) {
        return Err(Error::invalid("gamma must be positive"));
    }
    let n = problem.n();
    factorial_guard(n)?;
    let mut acc = RadiusAccumulator::new(problem, x_star);
    for_each_permutation(n, |perm| acc.visit(problem, x_star, gamma, perm));
    Ok(acc.finish(gamma, true))
}

/// Shuffling radius estimate: exact enumeration for `n <= 6`, Monte-Carlo
/// over `num_perms` sampled permutations (with reported standard error at the
/// maximizing index) otherwise.
///
/// For a schedule with several stepsizes the radius is the maximum over
/// them; this crate evaluates it at the largest stepsize, which for the
/// decreasing schedule is the initial one.
pub fn shuffling_radius_empirical<S: Scalar>(
    problem: &Problem<S>,
    x_star: &[S],
    gamma: S,
    num_perms: usize,
    seed: u64,
) -> Result<RadiusEstimate<S>> {
    if !(gamma > S::zero()) {
        return Err(Error::invalid("gamma must be positive"));
    }
    if num_perms == 0 {
        return Err(Error::invalid("need at least one permutation sample"));
    }
    let n = problem.n();
    if n <= 6 {
        return shuffling_radius_exact(problem, x_star, gamma);
    }
    let mut rng = substream(seed, StreamPurpose::MonteCarlo, 0);
    let mut acc = RadiusAccumulator::new(problem, x_star);
    for _ in 0..num_perms {
        let perm = random_permutation(&mut rng, n);
        acc.visit(problem, x_star, gamma, &perm);
    }
    Ok(acc.finish(gamma, false))
}

/// Closed-form upper bound on the shuffling radius:
/// `(L_max/2) n (n ||grad f(x*)||^2 + sigma_*^2 / 2)`.
///
/// With a vanishing full gradient this collapses to `L_max n sigma_*^2 / 4`.
pub fn shuffling_radius_bound<S: Scalar>(problem: &Problem<S>, x_star: &[S]) -> S {
    let l_max = problem.l_max();
    let n = cast_usize::<S>(problem.n());
    let grad_norm_sq = linalg::norm_sq(&problem.smooth_gradient(x_star));
    let sigma_star_sq = variance_at_opt(problem, x_star);
    l_max / cast::<S>(2.0) * n * (n * grad_norm_sq + sigma_star_sq / cast::<S>(2.0))
}

/// Variance of the local gradients on client `m` at the consensus optimum,
/// summed over all padded slots and normalized by the real sample count.
pub fn client_variance_at_opt<S: Scalar>(
    fed: &FederatedProblem<S>,
    m: usize,
    x_star: &[S],
) -> S {
    let client_grad = fed.client_grad(m, x_star);
    let real = cast_usize::<S>(fed.client_sizes()[m]);
    let mean: Vec<S> = client_grad.iter().map(|&g| g / real).collect();
    let mut grad = vec![S::zero(); fed.dim()];
    let mut acc = S::zero();
    for component in fed.client(m) {
        component.grad_into(x_star, &mut grad);
        acc += linalg::dist_sq(&grad, &mean);
    }
    acc / real
}

/// Shuffling-radius bound for the stacked federated problem:
/// `L_max sum_m (||grad F_m(x*)||^2 + (n/4) sigma_{m,*}^2)`.
pub fn fed_shuffling_radius_bound<S: Scalar>(fed: &FederatedProblem<S>, x_star: &[S]) -> S {
    let l_max = fed.l_max();
    let n = cast_usize::<S>(fed.slots());
    let mut acc = S::zero();
    for m in 0..fed.num_clients() {
        let grad_norm_sq = linalg::norm_sq(&fed.client_grad(m, x_star));
        let variance = client_variance_at_opt(fed, m, x_star);
        acc += grad_norm_sq + n / cast::<S>(4.0) * variance;
    }
    l_max * acc
}

/// How the without-replacement statistics are computed.
#[derive(Debug, Clone, Copy)]
pub enum WorMode {
    /// Enumerate all `C(n, i)` prefix sets exactly (`n <= 8`).
    Exhaustive,
    /// Sample permutation prefixes.
    MonteCarlo { samples: usize },
}

/// Visits all `i`-element subsets of `0..n` in lexicographic order.
fn for_each_combination(n: usize, i: usize, mut visit: impl FnMut(&[usize])) {
    let mut indices: Vec<usize> = (0..i).collect();
    if i == 0 || i > n {
        return;
    }
    loop {
        visit(&indices);
        // advance to the next combination
        let mut j = i;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            if indices[j] != j + n - i {
                indices[j] += 1;
                for k in (j + 1)..i {
                    indices[k] = indices[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Mean and squared-deviation expectation of prefix averages when sampling
/// `i` of the `n` vectors uniformly without replacement.
///
/// Returns `(E[mean of the prefix average], E ||prefix average - mean||^2)`,
/// to be compared against the closed forms `X_bar` and
/// `(n-i) / (i (n-1)) * sigma^2`.
pub fn sampling_wor_stats<S: Scalar>(
    vectors: &[Vec<S>],
    i: usize,
    mode: WorMode,
    seed: u64,
) -> Result<(Vec<S>, S)> {
    let n = vectors.len();
    if n == 0 {
        return Err(Error::invalid("need at least one vector"));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::invalid("vectors must share a dimension"));
    }
    if i == 0 || i > n {
        return Err(Error::invalid(format!("prefix length {i} out of range 1..={n}")));
    }
    let mean = linalg::pairwise_mean(vectors);
    let inv_i = S::one() / cast_usize::<S>(i);
    let mut mean_acc = vec![S::zero(); d];
    let mut dev_acc = S::zero();
    let mut count = 0u64;
    let mut visit = |chosen: &[usize]| {
        let mut prefix_mean = vec![S::zero(); d];
        for &k in chosen {
            linalg::axpy(S::one(), &vectors[k], &mut prefix_mean);
        }
        linalg::scale_in_place(&mut prefix_mean, inv_i);
        dev_acc += linalg::dist_sq(&prefix_mean, &mean);
        linalg::axpy(S::one(), &prefix_mean, &mut mean_acc);
        count += 1;
    };
    match mode {
        WorMode::Exhaustive => {
            if n > 8 {
                return Err(Error::invalid("exhaustive mode requires n <= 8"));
            }
            for_each_combination(n, i, visit);
        }
        WorMode::MonteCarlo { samples } => {
            if samples == 0 {
                return Err(Error::invalid("need at least one sample"));
            }
            let mut rng = substream(seed, StreamPurpose::MonteCarlo, 1);
            for _ in 0..samples {
                let perm = random_permutation(&mut rng, n);
                visit(&perm[..i]);
            }
        }
    }
    let inv_count = S::one() / S::from_u64(count).expect("count fits scalar");
    linalg::scale_in_place(&mut mean_acc, inv_count);
    Ok((mean_acc, dev_acc * inv_count))
}

/// Closed-form without-replacement variance `(n-i) / (i (n-1)) * sigma^2`.
pub fn wor_variance_closed_form<S: Scalar>(vectors: &[Vec<S>], i: usize) -> S {
    let n = vectors.len();
    if n <= 1 {
        return S::zero();
    }
    let mean = linalg::pairwise_mean(vectors);
    let sigma_sq = vectors
        .iter()
        .map(|v| linalg::dist_sq(v, &mean))
        .fold(S::zero(), |a, b| a + b)
        / cast_usize::<S>(n);
    cast_usize::<S>(n - i) / (cast_usize::<S>(i) * cast_usize::<S>(n - 1)) * sigma_sq
}

/// Which convergence guarantee to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// Strongly convex components, constant stepsize.
    RrStrongComponents,
    /// Strongly convex regularizer, constant stepsize.
    RrStrongRegularizer,
    /// With-replacement proximal SGD (epoch index = step count).
    ProxSgd,
    /// Decreasing epoch-wise schedule (absolute constants omitted).
    RrDecreasing,
    /// Federated, heterogeneous data, strongly convex regularizer.
    FedHeterogeneous,
    /// Federated, i.i.d. data, no regularizer.
    FedIid,
}

/// Which iteration-complexity expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityKind {
    /// Strongly convex components, tuned stepsize.
    RrStrongComponents,
    /// With-replacement proximal SGD.
    ProxSgd,
    /// Strongly convex regularizer, tuned stepsize.
    RrStrongRegularizer,
}

/// Parameters for [`theory_bound`] / [`complexity_bound`]; only the fields a
/// given kind uses must be present.
#[derive(Debug, Clone, Default)]
pub struct BoundInputs<S> {
    pub gamma: Option<S>,
    pub mu: Option<S>,
    pub n: Option<usize>,
    pub r0: Option<S>,
    pub l_max: Option<S>,
    pub sigma_rad_sq: Option<S>,
    pub sigma_star_sq: Option<S>,
    pub clients: Option<usize>,
    pub total_components: Option<usize>,
    pub client_grad_norms_sq: Option<Vec<S>>,
    pub client_variances: Option<Vec<S>>,
    pub epsilon: Option<S>,
    pub grad_norm_at_opt: Option<S>,
}

fn need<T: Copy>(value: Option<T>, name: &'static str) -> Result<T> {
    value.ok_or(Error::MissingParameter(name))
}

/// Evaluates the chosen error guarantee after `t` epochs (steps for the SGD
/// kind): the contraction term plus the stepsize-dependent neighborhood.
pub fn theory_bound<S: Scalar>(kind: BoundKind, inputs: &BoundInputs<S>, t: usize) -> Result<S> {
    let r0 = need(inputs.r0, "r0")?;
    let mu = need(inputs.mu, "mu")?;
    match kind {
        BoundKind::RrStrongComponents => {
            let gamma = need(inputs.gamma, "gamma")?;
            let n = need(inputs.n, "n")?;
            let sigma_rad_sq = need(inputs.sigma_rad_sq, "sigma_rad_sq")?;
            let contraction = (S::one() - gamma * mu).powi((n * t) as i32);
            Ok(contraction * r0 + cast::<S>(2.0) * gamma * gamma * sigma_rad_sq / mu)
        }
        BoundKind::RrStrongRegularizer => {
            let gamma = need(inputs.gamma, "gamma")?;
            let n = need(inputs.n, "n")?;
            let sigma_rad_sq = need(inputs.sigma_rad_sq, "sigma_rad_sq")?;
            let rate = S::one() + cast::<S>(2.0) * gamma * mu * cast_usize::<S>(n);
            Ok(rate.powi(-(t as i32)) * r0 + gamma * gamma * sigma_rad_sq / mu)
        }
        BoundKind::ProxSgd => {
            let gamma = need(inputs.gamma, "gamma")?;
            let sigma_star_sq = need(inputs.sigma_star_sq, "sigma_star_sq")?;
            let contraction = (S::one() - gamma * mu).powi(t as i32);
            Ok(contraction * r0 + cast::<S>(2.0) * gamma * sigma_star_sq / mu)
        }
        BoundKind::RrDecreasing => {
            let n = need(inputs.n, "n")?;
            let l_max = need(inputs.l_max, "l_max")?;
            let sigma_rad_sq = need(inputs.sigma_rad_sq, "sigma_rad_sq")?;
            if t == 0 {
                return Ok(r0);
            }
            let kappa = l_max / mu;
            let nf = cast_usize::<S>(n);
            let tf = cast_usize::<S>(t);
            let decay = (-(nf * tf) / (kappa + cast::<S>(2.0) * nf)).exp();
            Ok(decay * r0 + sigma_rad_sq / (mu.powi(3) * nf * nf * tf * tf))
        }
        BoundKind::FedHeterogeneous => {
            let gamma = need(inputs.gamma, "gamma")?;
            let n = need(inputs.n, "n")?;
            let l_max = need(inputs.l_max, "l_max")?;
            let clients = need(inputs.clients, "clients")?;
            let total = need(inputs.total_components, "total_components")?;
            let grad_norms = inputs
                .client_grad_norms_sq
                .as_ref()
                .ok_or(Error::MissingParameter("client_grad_norms_sq"))?;
            let variances = inputs
                .client_variances
                .as_ref()
                .ok_or(Error::MissingParameter("client_variances"))?;
            if grad_norms.len() != clients || variances.len() != clients {
                return Err(Error::invalid("need one gradient norm and variance per client"));
            }
            let m = cast_usize::<S>(clients);
            let quarter_ratio = cast_usize::<S>(total) / (cast::<S>(4.0) * m);
            let mut sum = S::zero();
            for (g, v) in grad_norms.iter().zip(variances) {
                sum += *g + quarter_ratio * *v;
            }
            let rate = S::one() + cast::<S>(2.0) * gamma * mu * cast_usize::<S>(n);
            Ok(rate.powi(-(t as i32)) * r0 + gamma * gamma * l_max / (m * mu) * sum)
        }
        BoundKind::FedIid => {
            let gamma = need(inputs.gamma, "gamma")?;
            let n = need(inputs.n, "n")?;
            let l_max = need(inputs.l_max, "l_max")?;
            let clients = need(inputs.clients, "clients")?;
            let total = need(inputs.total_components, "total_components")?;
            let sigma_star_sq = need(inputs.sigma_star_sq, "sigma_star_sq")?;
            let contraction = (S::one() - gamma * mu).powi((n * t) as i32);
            let plateau = gamma * gamma * l_max * cast_usize::<S>(total) * sigma_star_sq
                / (cast_usize::<S>(clients) * mu);
            Ok(contraction * r0 + plateau)
        }
    }
}

/// The stepsize-dependent neighborhood alone (the `t -> inf` limit of
/// [`theory_bound`], except for the decreasing schedule, which needs `t`).
pub fn theory_plateau<S: Scalar>(kind: BoundKind, inputs: &BoundInputs<S>) -> Result<S> {
    match kind {
        BoundKind::RrDecreasing => Err(Error::invalid(
            "the decreasing-schedule bound has no t-free plateau; use theory_bound",
        )),
        _ => {
            let mut no_r0 = inputs.clone();
            no_r0.r0 = Some(S::zero());
            theory_bound(kind, &no_r0, 1)
        }
    }
}

/// Iteration counts sufficient for an `epsilon`-accurate solution.
pub fn complexity_bound<S: Scalar>(kind: ComplexityKind, inputs: &BoundInputs<S>) -> Result<S> {
    let mu = need(inputs.mu, "mu")?;
    let l_max = need(inputs.l_max, "l_max")?;
    let r0 = need(inputs.r0, "r0")?;
    let epsilon = need(inputs.epsilon, "epsilon")?;
    let kappa = l_max / mu;
    let log_term = (cast::<S>(2.0) * r0 / epsilon).ln();
    match kind {
        ComplexityKind::RrStrongComponents => {
            let n = cast_usize::<S>(need(inputs.n, "n")?);
            let grad_norm = need(inputs.grad_norm_at_opt, "grad_norm_at_opt")?;
            let sigma_star = need(inputs.sigma_star_sq, "sigma_star_sq")?.sqrt();
            let noise =
                (kappa * n).sqrt() / (epsilon.sqrt() * mu) * (n.sqrt() * grad_norm + sigma_star);
            Ok((kappa + noise) * log_term)
        }
        ComplexityKind::ProxSgd => {
            let sigma_star_sq = need(inputs.sigma_star_sq, "sigma_star_sq")?;
            Ok((kappa + sigma_star_sq / (epsilon * mu * mu)) * log_term)
        }
        ComplexityKind::RrStrongRegularizer => {
            let n = cast_usize::<S>(need(inputs.n, "n")?);
            let sigma_rad = need(inputs.sigma_rad_sq, "sigma_rad_sq")?.sqrt();
            Ok((kappa + (sigma_rad / mu) / (epsilon * mu).sqrt() + n) * log_term)
        }
    }
}
