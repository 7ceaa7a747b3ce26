//! Scalar abstraction.
//!
//! Every numeric routine in this crate is generic over a floating-point
//! scalar, so the same code runs in `f64` (the default used by the CLI) or
//! `f32`. The crate root exposes concrete type aliases for both.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// A floating-point scalar with the arithmetic the crate needs: `f32`, `f64`,
/// or anything else satisfying the same bounds.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + ScalarOperand
    + LinalgScalar
    + Sum
    + Display
    + Debug
    + Send
    + Sync
{
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + NumAssign
        + ScalarOperand
        + LinalgScalar
        + Sum
        + Display
        + Debug
        + Send
        + Sync
{
}

/// Convert an `f64` constant into `S`.
#[inline]
pub fn real<S: Real>(x: f64) -> S {
    S::from_f64(x).expect("constant representable in the scalar type")
}

/// A numeric tolerance stated for `f64`, floored at a small multiple of the
/// scalar's epsilon so the same check stays meaningful in lower precision.
#[inline]
pub fn tol<S: Real>(base: f64) -> S {
    real::<S>(base).max(S::epsilon() * real::<S>(32.0))
}
