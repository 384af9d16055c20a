//! Scalar abstraction for the numeric kernels: f32 or f64.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::{Product, Sum};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the engines and fitters are generic over.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Product
    + Display
    + LowerExp
    + Debug
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal (tolerances, defaults) into the scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable in scalar type")
    }

    /// Lossy view of the scalar as `f64`, for diagnostics and error payloads.
    fn as_f64(self) -> f64 {
        num_traits::NumCast::from(self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
