//! The composite finite-sum problem: an average of smooth component oracles
//! plus a proximable regularizer.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{cast_usize, Scalar};

/// A smooth component `f_i` of the finite sum.
///
/// Oracles are immutable after construction and freely shareable across
/// threads.
pub trait SmoothComponent<S: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[S]) -> S;

    /// Writes the gradient at `x` into `out` (overwriting it).
    fn grad_into(&self, x: &[S], out: &mut [S]);

    /// Smoothness constant `L_i`.
    fn smoothness(&self) -> S;

    /// Strong-convexity constant `lambda_i >= 0`.
    fn strong_convexity(&self) -> S {
        S::zero()
    }

    fn gradient(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim()];
        self.grad_into(x, &mut out);
        out
    }
}

/// A proper closed convex regularizer with a computable proximal operator.
pub trait Regularizer<S: Scalar>: Send + Sync {
    /// `prox_{scale * psi}(x)`; `scale > 0`.
    fn prox(&self, x: &[S], scale: S) -> Vec<S>;

    /// `psi(x)`, possibly `+inf`.
    fn value(&self, x: &[S]) -> S;

    /// Strong-convexity constant `mu >= 0`.
    fn strong_convexity(&self) -> S;
}

/// Bregman divergence `D(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>`.
///
/// Nonnegative for convex oracles; identically zero for linear ones.
pub fn bregman_div<S: Scalar>(
    component: &dyn SmoothComponent<S>,
    x: &[S],
    y: &[S],
) -> Result<S> {
    let d = component.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if y.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: y.len() });
    }
    let grad_y = component.gradient(y);
    let mut inner = S::zero();
    for i in 0..d {
        inner += grad_y[i] * (x[i] - y[i]);
    }
    Ok(component.value(x) - component.value(y) - inner)
}

/// Per-component smoothness constants together with their max and mean.
#[derive(Debug, Clone)]
pub struct SmoothnessConstants<S> {
    pub per_component: Vec<S>,
    pub l_max: S,
    pub l_bar: S,
}

/// Finite-sum composite problem `P(x) = (1/n) sum f_i(x) + psi(x)`.
#[derive(Clone)]
pub struct Problem<S: Scalar> {
    components: Vec<Arc<dyn SmoothComponent<S>>>,
    regularizer: Arc<dyn Regularizer<S>>,
    dim: usize,
}

impl<S: Scalar> Problem<S> {
    pub fn new(
        components: Vec<Arc<dyn SmoothComponent<S>>>,
        regularizer: Arc<dyn Regularizer<S>>,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("problem needs at least one component"));
        }
        let dim = components[0].dim();
        if dim == 0 {
            return Err(Error::invalid("problem dimension must be positive"));
        }
        for (i, c) in components.iter().enumerate() {
            if c.dim() != dim {
                return Err(Error::invalid(format!(
                    "component {i} has dim {}, expected {dim}",
                    c.dim()
                )));
            }
        }
        Ok(Problem { components, regularizer, dim })
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn component(&self, i: usize) -> &dyn SmoothComponent<S> {
        self.components[i].as_ref()
    }

    pub fn components(&self) -> &[Arc<dyn SmoothComponent<S>>] {
        &self.components
    }

    pub fn regularizer(&self) -> &dyn Regularizer<S> {
        self.regularizer.as_ref()
    }

    pub fn regularizer_arc(&self) -> Arc<dyn Regularizer<S>> {
        Arc::clone(&self.regularizer)
    }

    /// Same components under a different regularizer.
    pub fn with_regularizer(&self, regularizer: Arc<dyn Regularizer<S>>) -> Self {
        Problem { components: self.components.clone(), regularizer, dim: self.dim }
    }

    /// `f(x) = (1/n) sum_i f_i(x)`.
    pub fn smooth_value(&self, x: &[S]) -> S {
        let mut acc = S::zero();
        for c in &self.components {
            acc += c.value(x);
        }
        acc / cast_usize::<S>(self.n())
    }

    /// Writes `grad f(x)` into `out`.
    pub fn smooth_grad_into(&self, x: &[S], out: &mut [S], scratch: &mut [S]) {
        linalg::fill_zero(out);
        for c in &self.components {
            c.grad_into(x, scratch);
            linalg::axpy(S::one(), scratch, out);
        }
        linalg::scale_in_place(out, S::one() / cast_usize::<S>(self.n()));
    }

    pub fn smooth_gradient(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        let mut scratch = vec![S::zero(); self.dim];
        self.smooth_grad_into(x, &mut out, &mut scratch);
        out
    }

    /// Full composite objective `P(x)`.
    pub fn objective(&self, x: &[S]) -> S {
        self.smooth_value(x) + self.regularizer.value(x)
    }

    /// Per-component smoothness constants, their max and mean.
    ///
    /// Components with zero smoothness (zero padding) cannot raise the max,
    /// so `l_max` reflects the nonzero oracles whenever any are present.
    pub fn smoothness_constants(&self) -> SmoothnessConstants<S> {
        let per: Vec<S> = self.components.iter().map(|c| c.smoothness()).collect();
        let l_max = per.iter().copied().fold(S::zero(), S::max);
        let l_bar = per.iter().copied().sum::<S>() / cast_usize::<S>(per.len());
        SmoothnessConstants { per_component: per, l_max, l_bar }
    }

    pub fn l_max(&self) -> S {
        self.smoothness_constants().l_max
    }

    /// Smallest strong-convexity constant among the components.
    pub fn min_component_strong_convexity(&self) -> S {
        self.components
            .iter()
            .map(|c| c.strong_convexity())
            .fold(S::infinity(), S::min)
    }
}
