//! Concrete smooth-component oracles: logistic loss, quadratics, linear and
//! zero components, plus a scaling wrapper used by problem reformulations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, sym_eigenvalues};
use crate::problem::SmoothComponent;
use crate::scalar::{cast, Scalar};

/// Numerically stable `log(1 + exp(z))`.
pub fn softplus<S: Scalar>(z: S) -> S {
    if z > S::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Numerically stable sigmoid `1 / (1 + exp(-t))`.
pub fn sigmoid<S: Scalar>(t: S) -> S {
    if t >= S::zero() {
        S::one() / (S::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (S::one() + e)
    }
}

/// Binary logistic loss on one sample with an optional in-loss ridge term.
///
/// `f(x) = -(b log h(a'x) + (1-b) log(1 - h(a'x))) + (l2/2) ||x||^2`
/// with `h` the sigmoid. The feature vector is sparse; the gradient is
/// `(h(a'x) - b) a + l2 x`.
#[derive(Debug, Clone)]
pub struct LogisticComponent<S> {
    features: Vec<(usize, S)>,
    label: bool,
    l2: S,
    dim: usize,
    feature_norm_sq: S,
}

impl<S: Scalar> LogisticComponent<S> {
    /// Builds the oracle from sorted sparse features `(index, value)`.
    pub fn new(features: Vec<(usize, S)>, label: bool, l2: S, dim: usize) -> Result<Self> {
        let mut prev: Option<usize> = None;
        for &(idx, _) in &features {
            if idx >= dim {
                return Err(Error::invalid(format!("feature index {idx} out of range {dim}")));
            }
            if let Some(p) = prev {
                if idx <= p {
                    return Err(Error::invalid("feature indices must be strictly increasing"));
                }
            }
            prev = Some(idx);
        }
        if l2 < S::zero() {
            return Err(Error::invalid("l2 coefficient must be nonnegative"));
        }
        let feature_norm_sq = features.iter().map(|&(_, v)| v * v).sum();
        Ok(LogisticComponent { features, label, l2, dim, feature_norm_sq })
    }

    pub fn from_dense(features: &[S], label: bool, l2: S) -> Result<Self> {
        let sparse: Vec<(usize, S)> = features
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != S::zero())
            .map(|(i, &v)| (i, v))
            .collect();
        Self::new(sparse, label, l2, features.len())
    }

    pub fn label(&self) -> bool {
        self.label
    }

    fn margin(&self, x: &[S]) -> S {
        self.features.iter().map(|&(i, v)| v * x[i]).sum()
    }

    /// Loss value and gradient in one pass.
    pub fn value_grad(&self, x: &[S]) -> (S, Vec<S>) {
        let mut grad = vec![S::zero(); self.dim];
        self.grad_into(x, &mut grad);
        (self.value(x), grad)
    }
}

impl<S: Scalar> SmoothComponent<S> for LogisticComponent<S> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[S]) -> S {
        let t = self.margin(x);
        let loss = if self.label { softplus(-t) } else { softplus(t) };
        if self.l2 > S::zero() {
            loss + cast::<S>(0.5) * self.l2 * linalg::norm_sq(x)
        } else {
            loss
        }
    }

    fn grad_into(&self, x: &[S], out: &mut [S]) {
        let t = self.margin(x);
        let b = if self.label { S::one() } else { S::zero() };
        let residual = sigmoid(t) - b;
        if self.l2 > S::zero() {
            for (o, &xi) in out.iter_mut().zip(x) {
                *o = self.l2 * xi;
            }
        } else {
            linalg::fill_zero(out);
        }
        for &(i, v) in &self.features {
            out[i] += residual * v;
        }
    }

    fn smoothness(&self) -> S {
        // sigmoid derivative is bounded by 1/4
        self.feature_norm_sq / cast::<S>(4.0) + self.l2
    }

    fn strong_convexity(&self) -> S {
        self.l2
    }
}

#[derive(Debug, Clone)]
enum SymMatrix<S> {
    Diagonal(Vec<S>),
    Dense(Vec<S>),
}

/// Quadratic component `f(x) = 1/2 x'Ax + c'x + offset` with symmetric
/// positive semidefinite `A`; closed-form test problems.
#[derive(Debug, Clone)]
pub struct QuadraticComponent<S> {
    matrix: SymMatrix<S>,
    linear: Vec<S>,
    offset: S,
    eig_min: S,
    eig_max: S,
}

impl<S: Scalar> QuadraticComponent<S> {
    pub fn diagonal(diag: Vec<S>, linear: Vec<S>, offset: S) -> Self {
        assert_eq!(diag.len(), linear.len());
        let eig_min = diag.iter().copied().fold(S::infinity(), S::min);
        let eig_max = diag.iter().copied().fold(S::neg_infinity(), S::max);
        QuadraticComponent { matrix: SymMatrix::Diagonal(diag), linear, offset, eig_min, eig_max }
    }

    /// Row-major symmetric `d x d` matrix.
    pub fn dense(matrix: Vec<S>, linear: Vec<S>, offset: S) -> Result<Self> {
        let d = linear.len();
        if matrix.len() != d * d {
            return Err(Error::invalid("matrix size must be d*d"));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                if (matrix[i * d + j] - matrix[j * d + i]).abs() > cast::<S>(1e-12) {
                    return Err(Error::invalid("matrix must be symmetric"));
                }
            }
        }
        let eig = sym_eigenvalues(&matrix, d);
        Ok(QuadraticComponent {
            matrix: SymMatrix::Dense(matrix),
            linear,
            offset,
            eig_min: eig[0],
            eig_max: eig[d - 1],
        })
    }

    /// `f(x) = 1/2 (x - center)'A(x - center)` for diagonal `A`.
    pub fn centered_diagonal(diag: Vec<S>, center: &[S]) -> Self {
        assert_eq!(diag.len(), center.len());
        let linear: Vec<S> = diag.iter().zip(center).map(|(&a, &b)| -a * b).collect();
        let offset = diag
            .iter()
            .zip(center)
            .map(|(&a, &b)| cast::<S>(0.5) * a * b * b)
            .sum();
        Self::diagonal(diag, linear, offset)
    }

    /// Writes `A x` into `out`.
    fn apply_matrix(&self, x: &[S], out: &mut [S]) {
        match &self.matrix {
            SymMatrix::Diagonal(diag) => {
                for ((o, &a), &xi) in out.iter_mut().zip(diag).zip(x) {
                    *o = a * xi;
                }
            }
            SymMatrix::Dense(m) => {
                let d = x.len();
                for i in 0..d {
                    let row = &m[i * d..(i + 1) * d];
                    out[i] = linalg::dot(row, x);
                }
            }
        }
    }
}

impl<S: Scalar> SmoothComponent<S> for QuadraticComponent<S> {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn value(&self, x: &[S]) -> S {
        let mut ax = vec![S::zero(); x.len()];
        self.apply_matrix(x, &mut ax);
        cast::<S>(0.5) * linalg::dot(x, &ax) + linalg::dot(&self.linear, x) + self.offset
    }

    fn grad_into(&self, x: &[S], out: &mut [S]) {
        self.apply_matrix(x, out);
        linalg::axpy(S::one(), &self.linear, out);
    }

    fn smoothness(&self) -> S {
        self.eig_max
    }

    fn strong_convexity(&self) -> S {
        self.eig_min
    }
}

/// Linear component `f(x) = <c, x>`; its Bregman divergence vanishes.
#[derive(Debug, Clone)]
pub struct LinearComponent<S> {
    coefficients: Vec<S>,
    declared_smoothness: S,
}

impl<S: Scalar> LinearComponent<S> {
    pub fn new(coefficients: Vec<S>) -> Self {
        LinearComponent { coefficients, declared_smoothness: S::one() }
    }

    /// A linear function is `L`-smooth for every `L > 0`; the declared
    /// constant only feeds stepsize rules.
    pub fn with_smoothness(mut self, l: S) -> Self {
        self.declared_smoothness = l;
        self
    }
}

impl<S: Scalar> SmoothComponent<S> for LinearComponent<S> {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }

    fn value(&self, x: &[S]) -> S {
        linalg::dot(&self.coefficients, x)
    }

    fn grad_into(&self, _x: &[S], out: &mut [S]) {
        out.copy_from_slice(&self.coefficients);
    }

    fn smoothness(&self) -> S {
        self.declared_smoothness
    }
}

/// Identically-zero component used to pad unequal client datasets.
#[derive(Debug, Clone)]
pub struct ZeroComponent {
    dim: usize,
}

impl ZeroComponent {
    pub fn new(dim: usize) -> Self {
        ZeroComponent { dim }
    }
}

impl<S: Scalar> SmoothComponent<S> for ZeroComponent {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[S]) -> S {
        S::zero()
    }

    fn grad_into(&self, _x: &[S], out: &mut [S]) {
        linalg::fill_zero(out);
    }

    fn smoothness(&self) -> S {
        S::zero()
    }
}

/// `factor * f` for an existing oracle `f`; smoothness and strong convexity
/// scale with the factor.
pub struct ScaledComponent<S: Scalar> {
    inner: Arc<dyn SmoothComponent<S>>,
    factor: S,
}

impl<S: Scalar> ScaledComponent<S> {
    pub fn new(inner: Arc<dyn SmoothComponent<S>>, factor: S) -> Self {
        ScaledComponent { inner, factor }
    }
}

impl<S: Scalar> SmoothComponent<S> for ScaledComponent<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, x: &[S]) -> S {
        self.factor * self.inner.value(x)
    }

    fn grad_into(&self, x: &[S], out: &mut [S]) {
        self.inner.grad_into(x, out);
        linalg::scale_in_place(out, self.factor);
    }

    fn smoothness(&self) -> S {
        self.factor * self.inner.smoothness()
    }

    fn strong_convexity(&self) -> S {
        self.factor * self.inner.strong_convexity()
    }
}
