//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type implementing [`Scalar`]. `f32` and `f64` are the two
//! instantiations; concrete type aliases live at the crate root.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
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
    /// Narrowing cast from `f64`. All randomness is drawn in `f64` and cast,
    /// so RNG streams are identical across scalar instantiations.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to any Scalar")
    }

    /// Widening cast to `f64` (exact for both supported types).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar widens to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
