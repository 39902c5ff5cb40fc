use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_rational::Rational64;
use num_traits::{Num, ToPrimitive, Zero};

/// Coefficient field for cocycles and interactions.
///
/// Implemented for `f64` and for exact rationals, so the same code path can be
/// checked bit-exactly with rationals and used numerically with floats.
pub trait Scalar: Num + Neg<Output = Self> + Clone + PartialEq + Debug + Display {
    fn from_i64(v: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Zero test: exact for rationals, `|v| <= 1e-12` for floats.
    fn is_negligible(&self) -> bool;
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-12
    }
}

impl Scalar for Rational64 {
    fn from_i64(v: i64) -> Self {
        Rational64::from_integer(v)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}
