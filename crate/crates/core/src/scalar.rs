//! Scalar abstraction shared by the propagation and solver code.
//!
//! Everything that carries a significance, a distribution factor or a weight
//! is generic over [`Scalar`]. `f64` is the working type; `f32` is supported
//! for memory-bound runs and [`BigRational`] gives exact answers on small
//! circuits, which is what the worked-example tests rely on.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Numeric type usable for significance propagation.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Magnitude below which a quantity is treated as zero.
    ///
    /// Floating-point types use an absolute floor of `1e-12`; exact types use 0.
    fn zero_floor() -> Self;

    /// Exact conversion from a small rational, such as a gate's ldf.
    fn from_ratio(r: &Ratio<u64>) -> Self {
        Self::from_u64(*r.numer()).expect("numerator fits") / Self::from_u64(*r.denom()).expect("denominator fits")
    }

    /// Lossy conversion used for reporting and error ratios.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::zero_floor()
    }
}

impl Scalar for f32 {
    fn zero_floor() -> Self {
        1e-12
    }
}

impl Scalar for f64 {
    fn zero_floor() -> Self {
        1e-12
    }
}

impl Scalar for BigRational {
    fn zero_floor() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn from_ratio(r: &Ratio<u64>) -> Self {
        BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
    }
}

/// Relative change `|delta| / |base|`, or 1.0 when the base is zero and the
/// delta is not negligible (a first-time weight counts as a full change).
pub(crate) fn relative_change<T: Scalar>(delta: &T, base: &T) -> f64 {
    if base.is_zero() {
        if delta.is_negligible() {
            0.0
        } else {
            1.0
        }
    } else {
        (delta.clone() / base.clone()).abs().to_f64_lossy()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    #[test]
    fn ratio_conversion_is_exact_for_rationals() {
        let third = Ratio::new(1u64, 3);
        let exact = BigRational::from_ratio(&third);
        assert_eq!(exact * BigRational::from_integer(3.into()), BigRational::one());
        assert!((f64::from_ratio(&third) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn relative_change_handles_zero_base() {
        assert_eq!(relative_change(&0.5f64, &0.0), 1.0);
        assert_eq!(relative_change(&1e-15f64, &0.0), 0.0);
        assert_eq!(relative_change(&0.25f64, &0.5), 0.5);
        assert_eq!(relative_change(&BigRational::zero(), &BigRational::zero()), 0.0);
    }
}
