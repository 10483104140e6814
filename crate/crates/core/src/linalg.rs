//! Dense vector helpers and a small symmetric eigensolver.
//!
//! Iterates are plain `Vec<S>`; sparsity lives inside the loss oracles, so
//! the arithmetic here stays simple and allocation-free in the hot paths.

use crate::scalar::{cast_usize, Scalar};

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm_sq<S: Scalar>(a: &[S]) -> S {
    dot(a, a)
}

pub fn norm<S: Scalar>(a: &[S]) -> S {
    norm_sq(a).sqrt()
}

pub fn dist_sq<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// `y += alpha * x`
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale_in_place<S: Scalar>(a: &mut [S], alpha: S) {
    for ai in a.iter_mut() {
        *ai *= alpha;
    }
}

pub fn fill_zero<S: Scalar>(a: &mut [S]) {
    for ai in a.iter_mut() {
        *ai = S::zero();
    }
}

pub fn all_finite<S: Scalar>(a: &[S]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Sums a list of equal-length vectors by recursive pairwise halving.
///
/// The reduction order depends only on the slice order, so serial and
/// parallel callers that assemble the same slice get bitwise-equal sums.
pub fn pairwise_sum<S: Scalar>(vectors: &[Vec<S>]) -> Vec<S> {
    assert!(!vectors.is_empty(), "pairwise_sum of empty list");
    fn rec<S: Scalar>(vectors: &[Vec<S>]) -> Vec<S> {
        match vectors.len() {
            1 => vectors[0].clone(),
            2 => {
                let mut out = vectors[0].clone();
                axpy(S::one(), &vectors[1], &mut out);
                out
            }
            len => {
                let mid = len / 2;
                let mut left = rec(&vectors[..mid]);
                let right = rec(&vectors[mid..]);
                axpy(S::one(), &right, &mut left);
                left
            }
        }
    }
    rec(vectors)
}

/// Mean of equal-length vectors, pairwise summed then scaled by `1/M`.
pub fn pairwise_mean<S: Scalar>(vectors: &[Vec<S>]) -> Vec<S> {
    let mut sum = pairwise_sum(vectors);
    let inv = S::one() / cast_usize::<S>(vectors.len());
    scale_in_place(&mut sum, inv);
    sum
}

/// Eigenvalues of a symmetric `d x d` matrix (row-major), ascending.
///
/// Cyclic Jacobi rotations; intended for the small matrices that parametrize
/// quadratic test components, not for large-scale work.
pub fn sym_eigenvalues<S: Scalar>(matrix: &[S], d: usize) -> Vec<S> {
    assert_eq!(matrix.len(), d * d, "matrix must be d*d");
    if d == 0 {
        return Vec::new();
    }
    let mut a = matrix.to_vec();
    let idx = |i: usize, j: usize| i * d + j;
    let tol = S::epsilon() * cast_usize::<S>(d * d);
    for _sweep in 0..100 {
        let mut off = S::zero();
        for i in 0..d {
            for j in (i + 1)..d {
                off += a[idx(i, j)] * a[idx(i, j)];
            }
        }
        let frob = (0..d * d).map(|k| a[k] * a[k]).fold(S::zero(), |s, v| s + v);
        if off <= tol * tol * (frob + S::one()) {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[idx(p, q)];
                if apq == S::zero() {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = (aqq - app) / (cast_usize::<S>(2) * apq);
                // stable tangent of the rotation angle
                let t = {
                    let sign = if theta >= S::zero() { S::one() } else { -S::one() };
                    sign / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<S> = (0..d).map(|i| a[idx(i, i)]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("non-finite eigenvalue"));
    eig
}
