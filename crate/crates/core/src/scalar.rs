//! Scalar abstraction shared by every scoring routine.
//!
//! Alignment scores, similarities and thresholds are all computed through
//! [`Scalar`], so the same code runs on `f32`, `f64` or exact rationals.
//! Rationals are what the oracle tests use when they need exact equality.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Rational64;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub trait Scalar:
    Num
    + Signed
    + PartialOrd
    + Copy
    + Debug
    + Display
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Builds the scalar `num / den` exactly when the type allows it.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a configured decimal value; rationals are recovered exactly
    /// for the short decimals used by the config file.
    fn from_config(v: f64) -> Self;
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_config(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }

    fn from_config(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for Rational64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }

    fn from_config(v: f64) -> Self {
        // Config values carry at most a handful of decimals.
        let scaled = (v * 1_000_000.0).round() as i64;
        Rational64::new(scaled, 1_000_000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_from_config_is_exact_for_short_decimals() {
        assert_eq!(Rational64::from_config(-0.01), Rational64::new(-1, 100));
        assert_eq!(Rational64::from_config(0.3), Rational64::new(3, 10));
        assert_eq!(Rational64::from_config(-0.5), Rational64::new(-1, 2));
    }

    #[test]
    fn from_ratio_agrees_across_types() {
        assert_eq!(f64::from_ratio(-1, 10), -0.1);
        assert_eq!(Rational64::from_ratio(3, 10).to_f64_lossy(), 0.3);
    }
}
