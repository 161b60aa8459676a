//! Scalar abstraction shared by every numerical module.
//!
//! All solver code is generic over [`Real`], implemented for `f32` and `f64`.
//! The acceptance-level tolerances (1e-12 and below) are only meaningful in
//! double precision; single precision is supported for throughput-oriented
//! runs where energy drift of order 1e-6 is acceptable.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Floating-point type usable by the solver.
///
/// `Float` and `Signed` (via `FftNum`) both define `abs`/`signum`, so call
/// sites spell those as `Float::abs(x)`.
pub trait Real:
    Float + FloatConst + FftNum + Default + Display + LowerExp + Debug + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("f64 literal is representable")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("usize is representable")
    }

    /// Lossless (for f32/f64) widening used by the binary snapshot format.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Absolute value without the `Float`/`Signed` method ambiguity.
    #[inline]
    fn magnitude(self) -> Self {
        Float::abs(self)
    }
}

impl Real for f32 {}
impl Real for f64 {}
