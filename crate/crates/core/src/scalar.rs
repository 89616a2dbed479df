//! Coefficient abstraction for the sequence algebra.
//!
//! The convolution and inverse-sequence machinery only needs ring/field
//! arithmetic, so it is written against [`Scalar`] instead of a fixed float
//! type. `Complex64` is the default working type, `f64` carries the
//! probabilistic layer, and `i64` / rationals give an exact path for the
//! involution and cancellation oracles where tolerances would only obscure
//! the result.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{Num, NumAssign, ToPrimitive};

/// Ring/field scalar usable as a sequence coefficient.
pub trait Scalar:
    Num + NumAssign + Neg<Output = Self> + Clone + PartialEq + Debug + Send + Sync + 'static
{
    /// Embeds a (small) signed integer.
    fn from_i64(n: i64) -> Self;

    /// Magnitude used for truncation, normalization and comparisons.
    fn modulus(&self) -> f64;
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn modulus(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }
}

impl Scalar for i64 {
    fn from_i64(n: i64) -> Self {
        n
    }

    fn modulus(&self) -> f64 {
        (*self as f64).abs()
    }
}

/// Exact rational path, used by the oracle tests on small instances.
impl Scalar for Ratio<i64> {
    fn from_i64(n: i64) -> Self {
        Ratio::from_integer(n)
    }

    fn modulus(&self) -> f64 {
        self.to_f64().map_or(f64::INFINITY, f64::abs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulus_matches_type() {
        assert_eq!((-3.5f64).modulus(), 3.5);
        assert_eq!(Complex64::new(3.0, 4.0).modulus(), 5.0);
        assert_eq!((-7i64).modulus(), 7.0);
    }

    #[test]
    fn integer_embedding() {
        assert_eq!(f64::from_i64(-2), -2.0);
        assert_eq!(Complex64::from_i64(3), Complex64::new(3.0, 0.0));
        assert_eq!(i64::from_i64(5), 5);
    }
}
