//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point element type of gradients, residuals and model replicas.
///
/// Implemented for `f32` and `f64`. Control quantities that are counts
/// (k, k′, block counts) stay integral regardless of the scalar.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Short name used in run summaries.
    const NAME: &'static str;

    /// Converts from `f64`, rounding to the nearest representable value.
    fn of(v: f64) -> Self;

    /// Widens to `f64`.
    fn as_f64(self) -> f64;

    /// Bit-level equality. Distinguishes `0.0` from `-0.0` and treats equal
    /// NaN payloads as equal.
    fn bit_eq(self, other: Self) -> bool;
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn bit_eq(self, other: Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    #[inline]
    fn of(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    #[inline]
    fn bit_eq(self, other: Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

/// Bitwise equality of two slices.
pub fn slices_bit_eq<T: Scalar>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bit_eq(*y))
}
