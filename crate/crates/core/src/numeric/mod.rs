//! Linear algebra and quadrature shared by the discretizations.

pub mod band;
pub mod dense;
pub mod quadrature;
pub mod sparse;

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::Float;

/// Complex double used for every time-harmonic field.
pub type C64 = num_complex::Complex<f64>;

/// Field element accepted by the sparse and banded kernels.
pub trait Scalar:
    Copy
    + PartialEq
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(x: f64) -> Self;
    /// Absolute value (modulus for complex numbers).
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn modulus(self) -> f64 {
        Float::abs(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        Float::is_finite(self)
    }
}

impl Scalar for C64 {
    #[inline]
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    #[inline]
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn is_finite(self) -> bool {
        Float::is_finite(self.re) && Float::is_finite(self.im)
    }
}

/// Euclidean norm of a vector.
pub fn norm2<T: Scalar>(v: &[T]) -> f64 {
    let mut acc = 0.0;
    for &x in v {
        let m = x.modulus();
        acc += m * m;
    }
    Float::sqrt(acc)
}
