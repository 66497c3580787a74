//! Floating-point scalar abstraction.
//!
//! All geometry and network math is generic over [`Real`], so the same code
//! runs in `f32` or `f64`. The default pipeline uses `f64` (see the type
//! aliases at the crate root): the networks involved are tiny, and full
//! precision keeps gradient checks and determinism contracts tight.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Scalar type for coordinates, intensities, radii, and network parameters.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Widens to `f64` for reporting and serialization.
    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Finite and strictly greater than zero (NaN fails).
    #[inline]
    fn is_strictly_positive(self) -> bool {
        self.is_finite() && self > Self::zero()
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssignOps
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
