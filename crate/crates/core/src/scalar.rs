//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point type the engine can run on (f32 or f64).
///
/// Everything numeric in the crate is written against this trait. Constants
/// are lifted through [`Scalar::lit`], and values leave the generic world
/// through [`Scalar::to_f64_lossy`] when they are serialized.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Debug + 'static
{
    /// Lift an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(k: usize) -> Self {
        <Self as FromPrimitive>::from_usize(k).expect("usize fits in a float")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn is_finite_value(self) -> bool {
        self.to_f64_lossy().is_finite()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(f64::lit(0.25), 0.25);
        assert_eq!(f32::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::from_usize_lossy(7), 7.0);
        assert!(!f64::lit(f64::INFINITY).is_finite_value());
    }
}
