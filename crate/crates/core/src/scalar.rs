//! Scalar abstraction: every numeric routine in this crate is generic over
//! [`Scalar`], instantiated in practice with `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps};

/// Floating-point scalar type used by all core math.
pub trait Scalar:
    Float + FromPrimitive + NumAssignOps + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + NumAssignOps + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the scalar type.
///
/// Panics if the value is not representable, which cannot happen for the
/// supported `f32`/`f64` instantiations.
pub fn cast<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("f64 constant not representable as scalar")
}

/// Converts a count into the scalar type.
pub fn cast_usize<S: Scalar>(x: usize) -> S {
    S::from_usize(x).expect("usize not representable as scalar")
}
