//! Floating-point scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Real scalar type for sampled nets: `f32` or `f64`.
///
/// Growth exponents, fits and reports are always carried in `f64`; only the
/// sampled frames and the transforms run in `T`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Debug + Display + Default + Send + Sync + 'static
{
    /// Machine epsilon as an `f64`, used to scale numerical noise floors.
    const EPSILON_F64: f64;

    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {
    const EPSILON_F64: f64 = f32::EPSILON as f64;
}

impl Real for f64 {
    const EPSILON_F64: f64 = f64::EPSILON;
}
