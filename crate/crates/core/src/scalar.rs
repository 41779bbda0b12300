//! Scalar traits.
//!
//! Grid solvers, mollifiers and the Monte Carlo layer are written against
//! [`Real`] (implemented for `f32` and `f64`). Closed-form constants and the
//! exponent schedules are written against [`Field`], which additionally
//! admits exact rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::BigRational;
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot
    /// represent at all, which never happens for the finite constants used here.
    #[inline(always)]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline(always)]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("index representable")
    }

    #[inline(always)]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field scalar. Exact for [`BigRational`], approximate for floats.
pub trait Field:
    Num + Signed + Clone + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display
{
    /// Whether arithmetic in this type is exact.
    const EXACT: bool;

    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable")
    }

    fn ratio(p: i64, q: i64) -> Self {
        Self::int(p) / Self::int(q)
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts an exact rational into this field.
    fn from_rational(r: &BigRational) -> Self;

    /// Text form used in tables; rationals always render as `p/q`.
    fn render(&self) -> String {
        format!("{self}")
    }
}

impl Field for f64 {
    const EXACT: bool = false;
    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
}

impl Field for f32 {
    const EXACT: bool = false;
    fn from_rational(r: &BigRational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }
}

impl Field for BigRational {
    const EXACT: bool = true;
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}
