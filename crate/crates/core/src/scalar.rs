//! Scalar abstraction shared by every trainer and metric.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::distributions::uniform::SampleUniform;

/// Floating point scalar: `f32` or `f64`.
///
/// The log-likelihood needs `ln`, so exact/rational types are not supported.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + SampleUniform
    + FromStr
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, panicking only for values that cannot be
    /// represented at all (never the case for the finite literals used here).
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 constant is representable")
    }

    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("usize is representable as float")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dot product of two equally sized slices.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}
