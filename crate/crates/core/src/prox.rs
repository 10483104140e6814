//! Closed-form proximal operators and the regularizers built from them.
//!
//! Operators take the full scale directly: Algorithm-style calls such as
//! `prox_{gamma * n * psi}` pass `gamma * n` as the scale, the multiplication
//! by `n` is the caller's responsibility.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::Regularizer;
use crate::scalar::{cast, cast_usize, Scalar};

/// Coordinatewise soft threshold: `prox` of `threshold * ||.||_1`.
///
/// `out_j = sign(x_j)(|x_j| - threshold)` when `|x_j| >= threshold`, else 0;
/// both branches agree at the boundary.
pub fn prox_l1<S: Scalar>(x: &[S], threshold: S) -> Vec<S> {
    x.iter()
        .map(|&v| {
            if v.abs() >= threshold {
                v.signum() * (v.abs() - threshold)
            } else {
                S::zero()
            }
        })
        .collect()
}

/// Prox of the elastic net `l1 ||.||_1 + (l2/2) ||.||^2` at scale `gamma`:
/// soft threshold at `gamma * l1`, then shrink by `1 / (1 + gamma * l2)`.
pub fn prox_elastic_net<S: Scalar>(x: &[S], gamma: S, l1: S, l2: S) -> Vec<S> {
    let mut out = prox_l1(x, gamma * l1);
    let shrink = S::one() / (S::one() + gamma * l2);
    if shrink != S::one() {
        linalg::scale_in_place(&mut out, shrink);
    }
    out
}

/// Prox of `gamma * (R + consensus)` over `M` stacked blocks: averages the
/// blocks and applies `prox_{(gamma/M) R}` to the mean. The caller replicates
/// the returned shared block.
pub fn prox_consensus_plus_r<S: Scalar>(
    blocks: &[Vec<S>],
    gamma: S,
    regularizer: &dyn Regularizer<S>,
) -> Result<Vec<S>> {
    if blocks.is_empty() {
        return Err(Error::invalid("consensus prox needs at least one block"));
    }
    let d = blocks[0].len();
    for b in blocks {
        if b.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: b.len() });
        }
    }
    let mean = linalg::pairwise_mean(blocks);
    let m = cast_usize::<S>(blocks.len());
    Ok(regularizer.prox(&mean, gamma / m))
}

/// `psi = 0`: the prox is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroRegularizer;

impl<S: Scalar> Regularizer<S> for ZeroRegularizer {
    fn prox(&self, x: &[S], _scale: S) -> Vec<S> {
        x.to_vec()
    }

    fn value(&self, _x: &[S]) -> S {
        S::zero()
    }

    fn strong_convexity(&self) -> S {
        S::zero()
    }
}

/// Elastic-net regularizer `l1 ||x||_1 + (l2/2) ||x||^2`.
#[derive(Debug, Clone, Copy)]
pub struct ElasticNet<S> {
    pub l1: S,
    pub l2: S,
}

impl<S: Scalar> ElasticNet<S> {
    pub fn new(l1: S, l2: S) -> Result<Self> {
        if l1 < S::zero() || l2 < S::zero() {
            return Err(Error::invalid("elastic net coefficients must be nonnegative"));
        }
        Ok(ElasticNet { l1, l2 })
    }

    pub fn l1_only(l1: S) -> Self {
        ElasticNet { l1, l2: S::zero() }
    }

    pub fn ridge(l2: S) -> Self {
        ElasticNet { l1: S::zero(), l2 }
    }
}

impl<S: Scalar> Regularizer<S> for ElasticNet<S> {
    fn prox(&self, x: &[S], scale: S) -> Vec<S> {
        prox_elastic_net(x, scale, self.l1, self.l2)
    }

    fn value(&self, x: &[S]) -> S {
        let l1_term: S = x.iter().map(|v| v.abs()).sum();
        self.l1 * l1_term + cast::<S>(0.5) * self.l2 * linalg::norm_sq(x)
    }

    fn strong_convexity(&self) -> S {
        self.l2
    }
}

/// `factor * psi` for an inner regularizer `psi`.
pub struct ScaledRegularizer<S: Scalar> {
    inner: Arc<dyn Regularizer<S>>,
    factor: S,
}

impl<S: Scalar> ScaledRegularizer<S> {
    pub fn new(inner: Arc<dyn Regularizer<S>>, factor: S) -> Result<Self> {
        if factor <= S::zero() {
            return Err(Error::invalid("regularizer scale factor must be positive"));
        }
        Ok(ScaledRegularizer { inner, factor })
    }
}

impl<S: Scalar> Regularizer<S> for ScaledRegularizer<S> {
    fn prox(&self, x: &[S], scale: S) -> Vec<S> {
        self.inner.prox(x, scale * self.factor)
    }

    fn value(&self, x: &[S]) -> S {
        self.factor * self.inner.value(x)
    }

    fn strong_convexity(&self) -> S {
        self.factor * self.inner.strong_convexity()
    }
}

/// Product-space regularizer `factor * (R + consensus)` on `M` stacked
/// `block_dim`-vectors: infinite off the diagonal set, `factor * R` on it.
///
/// Its prox replicates `prox_{(scale*factor/M) R}` of the block mean; its
/// strong-convexity constant on the stacked space is `factor * mu_R / M`.
pub struct ConsensusRegularizer<S: Scalar> {
    inner: Arc<dyn Regularizer<S>>,
    blocks: usize,
    block_dim: usize,
    factor: S,
}

impl<S: Scalar> ConsensusRegularizer<S> {
    pub fn new(
        inner: Arc<dyn Regularizer<S>>,
        blocks: usize,
        block_dim: usize,
        factor: S,
    ) -> Result<Self> {
        if blocks == 0 || block_dim == 0 {
            return Err(Error::invalid("consensus regularizer needs blocks >= 1, dim >= 1"));
        }
        if factor <= S::zero() {
            return Err(Error::invalid("consensus scale factor must be positive"));
        }
        Ok(ConsensusRegularizer { inner, blocks, block_dim, factor })
    }

    fn split<'a>(&self, x: &'a [S]) -> Vec<&'a [S]> {
        assert_eq!(x.len(), self.blocks * self.block_dim);
        x.chunks_exact(self.block_dim).collect()
    }
}

impl<S: Scalar> Regularizer<S> for ConsensusRegularizer<S> {
    fn prox(&self, x: &[S], scale: S) -> Vec<S> {
        let blocks: Vec<Vec<S>> = self.split(x).into_iter().map(|b| b.to_vec()).collect();
        let shared = prox_consensus_plus_r(&blocks, scale * self.factor, self.inner.as_ref())
            .expect("validated block structure");
        let mut out = Vec::with_capacity(x.len());
        for _ in 0..self.blocks {
            out.extend_from_slice(&shared);
        }
        out
    }

    fn value(&self, x: &[S]) -> S {
        let blocks = self.split(x);
        let first = blocks[0];
        // iterates produced by the prox have exactly equal blocks
        if blocks.iter().any(|b| *b != first) {
            return S::infinity();
        }
        self.factor * self.inner.value(first)
    }

    fn strong_convexity(&self) -> S {
        self.factor * self.inner.strong_convexity() / cast_usize::<S>(self.blocks)
    }
}
