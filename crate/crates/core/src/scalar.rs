//! Scalar abstractions.
//!
//! [`Field`] is the minimum needed for graph algebra (exact rationals work);
//! [`Real`] adds what eigen-solvers and integrators need.

use nalgebra::RealField;
use num_traits::{NumAssign, Signed, ToPrimitive};

/// Ordered field usable as a matrix entry.
pub trait Field: nalgebra::Scalar + Copy + NumAssign + Signed + PartialOrd + ToPrimitive {
    /// `|self| <= tol`, judged in `f64`.
    fn is_negligible(&self, tol: f64) -> bool {
        self.abs().to_f64().is_some_and(|v| v <= tol)
    }

    fn as_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Field for T where T: nalgebra::Scalar + Copy + NumAssign + Signed + PartialOrd + ToPrimitive {}

/// Floating-point field with transcendental functions and decompositions.
pub trait Real: Field + RealField {}

impl<T> Real for T where T: Field + RealField {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Positive infinity in `T`.
#[inline]
pub fn infinity<T: Real>() -> T {
    lit(f64::INFINITY)
}

/// Tolerance for quantities that should vanish up to rounding: `base` for
/// `f64`, scaled up with the type's epsilon for coarser types.
#[inline]
pub fn rounding_tol<T: Real>(base: f64) -> T {
    let eps = T::default_epsilon().as_f64();
    lit(base * (eps / f64::EPSILON).sqrt().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn rational_is_a_field() {
        fn takes<T: Field>(x: T) -> f64 {
            x.as_f64()
        }
        assert_eq!(takes(Rational64::new(1, 4)), 0.25);
        assert!(Rational64::new(0, 1).is_negligible(0.0));
    }

    #[test]
    fn tolerance_scales_with_precision() {
        assert_eq!(rounding_tol::<f64>(1e-9), 1e-9);
        assert!(rounding_tol::<f32>(1e-9) > 1e-6);
    }
}
