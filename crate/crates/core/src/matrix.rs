//! Dense `N×N` matrices over a [`Scalar`] with a declared Grassmann grading.
//!
//! `ComplexMatrix` is the bosonic fast path used by the dynamics and the ensemble
//! sampler; `GradedMatrix` carries Grassmann entries for fermionic algebra checks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grassmann::{Grassmann, Parity};
use crate::scalar::Scalar;

/// Declared Grassmann grading of a matrix: every entry is even, or every entry is odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Grading {
    #[default]
    Even,
    Odd,
}

impl Grading {
    pub fn compose(self, other: Grading) -> Grading {
        if self == other {
            Grading::Even
        } else {
            Grading::Odd
        }
    }

    pub fn is_odd(self) -> bool {
        self == Grading::Odd
    }

    /// Koszul sign `(-1)^{|a||b|}`.
    pub fn koszul(self, other: Grading) -> f64 {
        if self.is_odd() && other.is_odd() {
            -1.0
        } else {
            1.0
        }
    }

    pub fn parity(self) -> Parity {
        match self {
            Grading::Even => Parity::Even,
            Grading::Odd => Parity::Odd,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix<S: Scalar = Complex64> {
    dim: usize,
    generators: u8,
    entries: Vec<S>,
    grading: Grading,
    hermitian: bool,
    label: Option<String>,
}

pub type ComplexMatrix = OperatorMatrix<Complex64>;
pub type GradedMatrix = OperatorMatrix<Grassmann>;

impl<S: Scalar> OperatorMatrix<S> {
    /// Row-major entries; checked against the declared grading.
    pub fn new(dim: usize, entries: Vec<S>, grading: Grading) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("matrix dimension must be at least 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::Shape {
                left: dim * dim,
                right: entries.len(),
            });
        }
        let generators = entries[0].generators();
        for (k, e) in entries.iter().enumerate() {
            if e.generators() != generators {
                return Err(Error::GeneratorMismatch {
                    left: generators,
                    right: e.generators(),
                });
            }
            if !e.is_finite() {
                return Err(Error::NonFinite(format!("entry ({}, {})", k / dim, k % dim)));
            }
            let ok = match (grading, e.parity()) {
                (_, Parity::Mixed) => false,
                (Grading::Even, p) => p == Parity::Even,
                // zero reports even, and is allowed anywhere
                (Grading::Odd, Parity::Odd) => true,
                (Grading::Odd, Parity::Even) => e.norm_sqr() == 0.0,
            };
            if !ok {
                return Err(Error::Grading(format!(
                    "entry ({}, {}) has parity {:?} in a {:?} matrix",
                    k / dim,
                    k % dim,
                    e.parity(),
                    grading
                )));
            }
        }
        Ok(Self::from_parts(dim, generators, entries, grading))
    }

    fn from_parts(dim: usize, generators: u8, entries: Vec<S>, grading: Grading) -> Self {
        OperatorMatrix {
            dim,
            generators,
            entries,
            grading,
            hermitian: false,
            label: None,
        }
    }

    pub fn zeros(dim: usize, generators: u8, grading: Grading) -> Self {
        Self::from_parts(dim, generators, alloc::vec![S::zero(generators); dim * dim], grading)
    }

    pub fn identity(dim: usize, generators: u8) -> Self {
        let mut m = Self::zeros(dim, generators, Grading::Even);
        for i in 0..dim {
            m.entries[i * dim + i] = S::from_complex(Complex64::new(1.0, 0.0), generators);
        }
        m.hermitian = true;
        m
    }

    pub fn from_fn<F>(dim: usize, grading: Grading, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> S,
    {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self::new(dim, entries, grading)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> u8 {
        self.generators
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.dim + j]
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    /// Sets the Hermitian flag after checking `adjoint(M) = M` to `1e-12`.
    pub fn mark_hermitian(mut self) -> Result<Self> {
        let defect = self.minus(&self.adjoint()).frobenius_norm();
        if defect > 1e-12 * (1.0 + self.frobenius_norm()) {
            return Err(Error::Config(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        self.hermitian = true;
        Ok(self)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Shape {
                left: self.dim,
                right: other.dim,
            });
        }
        if self.generators != other.generators {
            return Err(Error::GeneratorMismatch {
                left: self.generators,
                right: other.generators,
            });
        }
        Ok(())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = S::zero(self.generators);
                for k in 0..n {
                    acc.add_product(&self.entries[i * n + k], &other.entries[k * n + j]);
                }
                out.push(acc);
            }
        }
        Self::from_parts(n, self.generators, out, self.grading.compose(other.grading))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        self.check_same_grading(other)?;
        Ok(self.plus(other))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        self.check_same_grading(other)?;
        Ok(self.minus(other))
    }

    fn check_same_grading(&self, other: &Self) -> Result<()> {
        if self.grading != other.grading {
            return Err(Error::Grading(format!(
                "cannot add {:?} and {:?} matrices",
                self.grading, other.grading
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&S, &S) -> S) -> Self {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| f(a, b))
            .collect();
        Self::from_parts(self.dim, self.generators, entries, self.grading)
    }

    pub(crate) fn plus(&self, other: &Self) -> Self {
        self.zip_with(other, S::plus)
    }

    pub(crate) fn minus(&self, other: &Self) -> Self {
        self.zip_with(other, S::minus)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let entries = self.entries.iter().map(|e| e.scale(c)).collect();
        Self::from_parts(self.dim, self.generators, entries, self.grading)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// `self + c * other`, used heavily by the integrators.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Self {
        let c = Complex64::new(c, 0.0);
        self.zip_with(other, |a, b| a.plus(&b.scale(c)))
    }

    pub fn trace(&self) -> S {
        let mut acc = S::zero(self.generators);
        for i in 0..self.dim {
            acc = acc.plus(&self.entries[i * self.dim + i]);
        }
        acc
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> S {
        let n = self.dim;
        let mut acc = S::zero(self.generators);
        for i in 0..n {
            for k in 0..n {
                acc.add_product(&self.entries[i * n + k], &other.entries[k * n + i]);
            }
        }
        acc
    }

    /// Conjugate transpose with entrywise Grassmann adjoint.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.entries[j * n + i].adjoint());
            }
        }
        let mut out = Self::from_parts(n, self.generators, entries, self.grading);
        out.hermitian = self.hermitian;
        out
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other).minus(&other.mul_unchecked(self)))
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other).plus(&other.mul_unchecked(self)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }
}

impl ComplexMatrix {
    pub fn from_rows(rows: &[&[Complex64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Config("matrix rows must form a square".into()));
        }
        Self::new(dim, rows.iter().flat_map(|r| r.iter().copied()).collect(), Grading::Even)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Config("matrix rows must form a square".into()));
        }
        Self::new(
            dim,
            rows.iter()
                .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
                .collect(),
            Grading::Even,
        )
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, 0, Grading::Even);
        for (i, &d) in diag.iter().enumerate() {
            m.entries[i * n + i] = d;
        }
        m
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        self.hermitian = false;
        &mut self.entries
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.hermitian = false;
        self.entries[i * self.dim + j] = value;
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Embeds the complex matrix into a graded matrix over `generators` generators.
    pub fn to_graded(&self, generators: u8) -> Result<GradedMatrix> {
        GradedMatrix::new(
            self.dim,
            self.entries
                .iter()
                .map(|&c| Grassmann::scalar(c, generators))
                .collect(),
            Grading::Even,
        )
    }
}

impl GradedMatrix {
    /// Random matrix with entries of the parity matching `grading`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        dim: usize,
        generators: u8,
        grading: Grading,
        density: f64,
    ) -> Self {
        let parity = grading.parity();
        let entries = (0..dim * dim)
            .map(|_| Grassmann::random(rng, generators, parity, density))
            .collect();
        Self::from_parts(dim, generators, entries, grading)
    }
}

/// Hermitian matrix with unit-variance real diagonal and off-diagonal entries whose
/// real and imaginary parts each have variance 1/2, so `E[Tr M²] = N²`.
pub fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hermitian_with(&mut rng, dim)
}

pub fn random_hermitian_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    assert!(dim >= 1, "random_hermitian needs dim >= 1");
    let mut m = ComplexMatrix::zeros(dim, 0, Grading::Even);
    let half = core::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        m.entries[i * dim + i] = Complex64::new(d, 0.0);
        for j in (i + 1)..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re * half, im * half);
            m.entries[i * dim + j] = z;
            m.entries[j * dim + i] = z.conj();
        }
    }
    m.hermitian = true;
    m
}

/// Haar-ish random unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        for u in &cols {
            let dot: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, a) in v.iter_mut().zip(u) {
                *x -= dot * a;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        for x in &mut v {
            *x /= norm;
        }
        cols.push(v);
    }
    let mut m = ComplexMatrix::zeros(dim, 0, Grading::Even);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            m.entries[i * dim + j] = z;
        }
    }
    m
}

// Operator sugar panics on shape mismatch, like the usual dense-matrix crates.
impl<S: Scalar> Mul for &OperatorMatrix<S> {
    type Output = OperatorMatrix<S>;
    fn mul(self, rhs: &OperatorMatrix<S>) -> OperatorMatrix<S> {
        self.checked_mul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<S: Scalar> Add for &OperatorMatrix<S> {
    type Output = OperatorMatrix<S>;
    fn add(self, rhs: &OperatorMatrix<S>) -> OperatorMatrix<S> {
        self.checked_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<S: Scalar> Sub for &OperatorMatrix<S> {
    type Output = OperatorMatrix<S>;
    fn sub(self, rhs: &OperatorMatrix<S>) -> OperatorMatrix<S> {
        self.checked_sub(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl<S: Scalar> Neg for &OperatorMatrix<S> {
    type Output = OperatorMatrix<S>;
    fn neg(self) -> OperatorMatrix<S> {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, Grading::Even, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
        .unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_complex(&mut rng, 3);
        let i = ComplexMatrix::identity(3, 0);
        assert_eq!(&i * &a, a);
        assert_eq!(i.trace(), c(3.0, 0.0));
    }

    #[test]
    fn associativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b, m) = (
            random_complex(&mut rng, 3),
            random_complex(&mut rng, 3),
            random_complex(&mut rng, 3),
        );
        let lhs = &(&a * &b) * &m;
        let rhs = &a * &(&b * &m);
        assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn odd_times_odd_is_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = GradedMatrix::random(&mut rng, 2, 4, Grading::Odd, 0.6);
        let b = GradedMatrix::random(&mut rng, 2, 4, Grading::Odd, 0.6);
        assert_eq!((&a * &b).grading(), Grading::Even);
        assert_eq!((&a * &a).grading(), Grading::Even);
    }

    #[test]
    fn grading_checked_at_construction() {
        let theta = Grassmann::generator(0, 2).unwrap();
        let one = Grassmann::one(2);
        let zero = Grassmann::zero(2);
        assert!(GradedMatrix::new(1, alloc::vec![theta.clone()], Grading::Odd).is_ok());
        assert!(GradedMatrix::new(1, alloc::vec![zero], Grading::Odd).is_ok());
        assert!(matches!(
            GradedMatrix::new(1, alloc::vec![one.clone()], Grading::Odd),
            Err(Error::Grading(_))
        ));
        assert!(matches!(
            GradedMatrix::new(1, alloc::vec![&one + &theta], Grading::Even),
            Err(Error::Grading(_))
        ));
        assert!(matches!(
            ComplexMatrix::new(2, alloc::vec![c(1.0, 0.0); 3], Grading::Even),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = ComplexMatrix::identity(2, 0);
        let b = ComplexMatrix::identity(3, 0);
        assert!(matches!(a.checked_mul(&b), Err(Error::Shape { left: 2, right: 3 })));
        assert!(a.commutator(&b).is_err());
    }

    #[test]
    fn even_trace_is_cyclic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_complex(&mut rng, 4);
        let b = random_complex(&mut rng, 4);
        let d = (&a * &b).trace() - (&b * &a).trace();
        assert!(d.norm() < 1e-12);
    }

    /// Independent oracle: expand `Tr(AB)` as an explicit sum of entry products.
    fn trace_by_expansion(a: &GradedMatrix, b: &GradedMatrix) -> Grassmann {
        let n = a.dim();
        let mut acc = Grassmann::zero(a.generators());
        for i in 0..n {
            for j in 0..n {
                acc = &acc + &(a.get(i, j) * b.get(j, i));
            }
        }
        acc
    }

    #[test]
    fn odd_trace_is_anticyclic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = GradedMatrix::random(&mut rng, 2, 4, Grading::Odd, 0.7);
            let b = GradedMatrix::random(&mut rng, 2, 4, Grading::Odd, 0.7);
            let ab = trace_by_expansion(&a, &b);
            let ba = trace_by_expansion(&b, &a);
            assert!((&ab + &ba).norm_sqr() < 1e-24);
            assert!((&(&a * &b).trace() - &ab).norm_sqr() < 1e-24);
            let sum = &(&a * &b).trace() + &(&b * &a).trace();
            assert!(sum.norm_sqr() < 1e-24);
        }
    }

    #[test]
    fn pauli_commutator() {
        let sx = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let sy = ComplexMatrix::from_rows(&[&[c(0.0, 0.0), c(0.0, -1.0)], &[c(0.0, 1.0), c(0.0, 0.0)]])
            .unwrap();
        let comm = sx.commutator(&sy).unwrap();
        // direct arithmetic: [σx, σy] = 2iσz
        let expected = ComplexMatrix::from_diagonal(&[c(0.0, 2.0), c(0.0, -2.0)]);
        assert!(comm.max_abs_diff(&expected) < 1e-15);
        assert!(comm.max_abs_diff(&(-&comm.adjoint())) < 1e-15);
        assert!(sx.commutator(&sx).unwrap().frobenius_norm() == 0.0);
        let anti = sx.anticommutator(&sy).unwrap();
        assert!(anti.frobenius_norm() < 1e-15);
    }

    #[test]
    fn commutator_of_hermitians_is_antihermitian() {
        let a = random_hermitian(4, 10);
        let b = random_hermitian(4, 11);
        let comm = a.commutator(&b).unwrap();
        assert!(comm.adjoint().max_abs_diff(&(-&comm)) < 1e-12);
        assert!(comm.trace().norm() < 1e-12);
    }

    #[test]
    fn random_hermitian_is_deterministic_and_hermitian() {
        let a = random_hermitian(5, 42);
        let b = random_hermitian(5, 42);
        assert_eq!(a, b);
        assert!(a.is_hermitian_flagged());
        assert_eq!(a.max_abs_diff(&a.adjoint()), 0.0);
        assert!(a.clone().mark_hermitian().is_ok());
        assert_ne!(random_hermitian(5, 43), a);
    }

    #[test]
    fn mark_hermitian_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(m.mark_hermitian().is_err());
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_unitary_with(&mut rng, 4);
        let prod = &u * &u.adjoint();
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(4, 0)) < 1e-12);
    }

    #[test]
    fn adjoint_reverses_graded_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let a = GradedMatrix::random(&mut rng, 3, 4, Grading::Odd, 0.5);
            let b = GradedMatrix::random(&mut rng, 3, 4, Grading::Even, 0.5);
            let lhs = (&a * &b).adjoint();
            let rhs = &b.adjoint() * &a.adjoint();
            assert!((&lhs - &rhs).frobenius_norm() < 1e-12);
        }
    }
}
