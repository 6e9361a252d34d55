use core::fmt::Debug;

use num_complex::Complex64;

use crate::grassmann::{Grassmann, Parity};

/// Entry type of an [`OperatorMatrix`](crate::matrix::OperatorMatrix).
///
/// Implemented by `Complex64` (the bosonic fast path, zero generators) and by
/// [`Grassmann`]. The generator count is threaded through constructors so that a
/// zero Grassmann element still knows which algebra it lives in.
pub trait Scalar: Clone + Debug + PartialEq + Send + Sync + 'static {
    fn zero(generators: u8) -> Self;
    fn from_complex(c: Complex64, generators: u8) -> Self;
    fn generators(&self) -> u8;

    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn negate(&self) -> Self;
    fn scale(&self, c: Complex64) -> Self;
    fn adjoint(&self) -> Self;

    fn parity(&self) -> Parity;
    fn norm_sqr(&self) -> f64;
    fn is_finite(&self) -> bool;

    /// `self += a * b`.
    fn add_product(&mut self, a: &Self, b: &Self) {
        *self = self.plus(&a.times(b));
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn zero(_generators: u8) -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn from_complex(c: Complex64, _generators: u8) -> Self {
        c
    }
    #[inline]
    fn generators(&self) -> u8 {
        0
    }
    #[inline]
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    #[inline]
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    #[inline]
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    #[inline]
    fn negate(&self) -> Self {
        -self
    }
    #[inline]
    fn scale(&self, c: Complex64) -> Self {
        self * c
    }
    #[inline]
    fn adjoint(&self) -> Self {
        self.conj()
    }
    #[inline]
    fn parity(&self) -> Parity {
        Parity::Even
    }
    #[inline]
    fn norm_sqr(&self) -> f64 {
        Complex64::norm_sqr(self)
    }
    #[inline]
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn add_product(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
}

impl Scalar for Grassmann {
    fn zero(generators: u8) -> Self {
        Grassmann::zero(generators)
    }
    fn from_complex(c: Complex64, generators: u8) -> Self {
        Grassmann::scalar(c, generators)
    }
    fn generators(&self) -> u8 {
        Grassmann::generators(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn negate(&self) -> Self {
        -self
    }
    fn scale(&self, c: Complex64) -> Self {
        Grassmann::scale(self, c)
    }
    fn adjoint(&self) -> Self {
        Grassmann::adjoint(self)
    }
    fn parity(&self) -> Parity {
        Grassmann::parity(self)
    }
    fn norm_sqr(&self) -> f64 {
        Grassmann::norm_sqr(self)
    }
    fn is_finite(&self) -> bool {
        Grassmann::is_finite(self)
    }
}
