//! Scalar abstraction for the numerical kernels.
//!
//! Everything numerical in this crate is generic over [`Real`], implemented
//! for `f32` and `f64`. The trait bundles the `num-traits` capabilities the
//! kernels need plus two clamp constants that depend on the format's range.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every kernel in this crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Lower clamp for cdf/link outputs: small enough that log() stays deep
    /// in the tail, large enough that 1/x does not overflow.
    fn link_clamp_lo() -> Self;
    /// Upper clamp for cdf/link outputs, strictly below 1.
    fn link_clamp_hi() -> Self;

    /// Shorthand for lossless construction from an `f64` literal.
    ///
    /// Panics only if the value is not representable at all (never for
    /// finite literals in f32/f64).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Real for f64 {
    fn link_clamp_lo() -> Self {
        1e-300
    }
    fn link_clamp_hi() -> Self {
        1.0 - 1e-16
    }
}

impl Real for f32 {
    fn link_clamp_lo() -> Self {
        1e-38
    }
    fn link_clamp_hi() -> Self {
        // 1 - 2^-24: the largest f32 strictly below 1 reachable by rounding.
        1.0 - 5.9604645e-8
    }
}

/// Clamp a probability-like value into the open unit interval used by the
/// link contract.
pub fn clamp_unit<T: Real>(p: T) -> T {
    p.max(T::link_clamp_lo()).min(T::link_clamp_hi())
}
