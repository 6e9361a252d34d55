//! Truncated exterior algebra with complex coefficients.
//!
//! An element is a sparse map from generator subsets (bitmasks) to coefficients.
//! A mask `0b101` stands for the ordered monomial `θ₀θ₂`; monomials are always kept
//! in increasing generator order and reordering signs are folded into coefficients.
//! Generators are self-adjoint, `θ† = θ`, so the adjoint reverses each monomial.

use alloc::collections::BTreeMap;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const MAX_GENERATORS: u8 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    pub fn of_degree(degree: u32) -> Parity {
        if degree % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Parity of a product; `Mixed` absorbs everything.
    pub fn compose(self, other: Parity) -> Parity {
        match (self, other) {
            (Parity::Mixed, _) | (_, Parity::Mixed) => Parity::Mixed,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }
}

/// Sign picked up when the ordered monomials `a` and `b` are concatenated and
/// sorted. Zero when they share a generator.
#[inline]
pub(crate) fn monomial_sign(a: u16, b: u16) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1
    } else {
        -1
    }
}

#[derive(Clone, PartialEq)]
pub struct Grassmann {
    generators: u8,
    terms: BTreeMap<u16, Complex64>,
}

impl Grassmann {
    pub fn zero(generators: u8) -> Self {
        debug_assert!(generators <= MAX_GENERATORS);
        Grassmann {
            generators,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(generators: u8) -> Self {
        Self::scalar(Complex64::new(1.0, 0.0), generators)
    }

    pub fn scalar(c: Complex64, generators: u8) -> Self {
        let mut out = Self::zero(generators);
        if c != Complex64::new(0.0, 0.0) {
            out.terms.insert(0, c);
        }
        out
    }

    /// The single generator `θ_index` (zero-based).
    pub fn generator(index: u8, generators: u8) -> Result<Self> {
        check_generators(generators)?;
        if index >= generators {
            return Err(Error::Config(alloc::format!(
                "generator index {index} out of range for {generators} generators"
            )));
        }
        Self::monomial(1u16 << index, Complex64::new(1.0, 0.0), generators)
    }

    pub fn monomial(mask: u16, c: Complex64, generators: u8) -> Result<Self> {
        Self::from_terms(generators, [(mask, c)])
    }

    /// Builds an element from `(mask, coefficient)` pairs; repeated masks are summed.
    pub fn from_terms<I>(generators: u8, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u16, Complex64)>,
    {
        check_generators(generators)?;
        let mut out = Self::zero(generators);
        for (mask, c) in terms {
            if generators < 16 && mask >> generators != 0 {
                return Err(Error::Config(alloc::format!(
                    "monomial mask {mask:#b} uses generators beyond {generators}"
                )));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFinite(alloc::format!("coefficient of mask {mask:#b}")));
            }
            out.accumulate(mask, c);
        }
        Ok(out)
    }

    pub fn generators(&self) -> u8 {
        self.generators
    }

    pub fn coefficient(&self, mask: u16) -> Complex64 {
        self.terms.get(&mask).copied().unwrap_or_default()
    }

    /// Coefficient of the empty monomial.
    pub fn body(&self) -> Complex64 {
        self.coefficient(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u16, Complex64)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.terms.values().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Zero reports even.
    pub fn parity(&self) -> Parity {
        let mut seen_even = false;
        let mut seen_odd = false;
        for &mask in self.terms.keys() {
            if mask.count_ones() % 2 == 0 {
                seen_even = true;
            } else {
                seen_odd = true;
            }
        }
        match (seen_even, seen_odd) {
            (_, false) => Parity::Even,
            (false, true) => Parity::Odd,
            (true, true) => Parity::Mixed,
        }
    }

    pub fn try_mul(&self, other: &Grassmann) -> Result<Grassmann> {
        if self.generators != other.generators {
            return Err(Error::GeneratorMismatch {
                left: self.generators,
                right: other.generators,
            });
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Grassmann) -> Grassmann {
        let mut out = Grassmann::zero(self.generators);
        for (&ma, &ca) in &self.terms {
            for (&mb, &cb) in &other.terms {
                match monomial_sign(ma, mb) {
                    0 => {}
                    1 => out.accumulate(ma | mb, ca * cb),
                    _ => out.accumulate(ma | mb, -(ca * cb)),
                }
            }
        }
        out
    }

    /// Complex-conjugates coefficients and reverses every monomial.
    pub fn adjoint(&self) -> Grassmann {
        let terms = self
            .terms
            .iter()
            .map(|(&mask, &c)| {
                let k = mask.count_ones();
                // reversing k generators takes k(k-1)/2 transpositions
                let sign = if (k * k.saturating_sub(1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                (mask, c.conj() * sign)
            })
            .collect();
        Grassmann {
            generators: self.generators,
            terms,
        }
    }

    pub fn scale(&self, c: Complex64) -> Grassmann {
        let mut out = Grassmann::zero(self.generators);
        for (&mask, &v) in &self.terms {
            out.accumulate(mask, v * c);
        }
        out
    }

    /// Sum of squared coefficient moduli.
    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// Random element of the requested parity: every admissible monomial gets a
    /// complex Gaussian coefficient with probability `density`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        generators: u8,
        parity: Parity,
        density: f64,
    ) -> Grassmann {
        let mut out = Grassmann::zero(generators);
        for mask in 0u32..(1u32 << generators) {
            let mask = mask as u16;
            let admissible = match parity {
                Parity::Even => mask.count_ones() % 2 == 0,
                Parity::Odd => mask.count_ones() % 2 == 1,
                Parity::Mixed => true,
            };
            if admissible && rng.random::<f64>() < density {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                out.accumulate(mask, Complex64::new(re, im));
            }
        }
        out
    }

    fn accumulate(&mut self, mask: u16, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let entry = self.terms.entry(mask).or_default();
        *entry += c;
        if *entry == Complex64::new(0.0, 0.0) {
            self.terms.remove(&mask);
        }
    }

    fn combine(&self, other: &Grassmann, sign: f64) -> Grassmann {
        assert_eq!(
            self.generators, other.generators,
            "Grassmann generator count mismatch"
        );
        let mut out = self.clone();
        for (&mask, &c) in &other.terms {
            out.accumulate(mask, c * sign);
        }
        out
    }
}

fn check_generators(generators: u8) -> Result<()> {
    if generators > MAX_GENERATORS {
        Err(Error::TooManyGenerators(generators))
    } else {
        Ok(())
    }
}

impl fmt::Debug for Grassmann {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&mask, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for g in 0..16 {
                if mask & (1 << g) != 0 {
                    write!(f, "θ{g}")?;
                }
            }
        }
        Ok(())
    }
}

// Arithmetic operators panic on mismatched generator counts; use `try_mul` for a
// checked product.
impl Add for &Grassmann {
    type Output = Grassmann;
    fn add(self, rhs: &Grassmann) -> Grassmann {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &Grassmann {
    type Output = Grassmann;
    fn sub(self, rhs: &Grassmann) -> Grassmann {
        self.combine(rhs, -1.0)
    }
}

impl Mul for &Grassmann {
    type Output = Grassmann;
    fn mul(self, rhs: &Grassmann) -> Grassmann {
        match self.try_mul(rhs) {
            Ok(v) => v,
            Err(e) => panic!("{e}"),
        }
    }
}

impl Neg for &Grassmann {
    type Output = Grassmann;
    fn neg(self) -> Grassmann {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Grassmann {
            type Output = Grassmann;
            fn $method(self, rhs: Grassmann) -> Grassmann {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Grassmann {
    type Output = Grassmann;
    fn neg(self) -> Grassmann {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn theta(i: u8, g: u8) -> Grassmann {
        Grassmann::generator(i, g).unwrap()
    }

    /// Independent product: expand both factors into explicit ordered generator
    /// lists, concatenate, and bubble-sort counting transpositions.
    fn brute_product(a: &Grassmann, b: &Grassmann) -> Grassmann {
        let g = a.generators();
        let mut out = Grassmann::zero(g);
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                let mut word: alloc::vec::Vec<u8> = (0..g).filter(|i| ma & (1 << i) != 0).collect();
                word.extend((0..g).filter(|i| mb & (1 << i) != 0));
                let mut sign = 1.0;
                let n = word.len();
                for i in 0..n {
                    for j in 0..n - 1 - i {
                        if word[j] > word[j + 1] {
                            word.swap(j, j + 1);
                            sign = -sign;
                        }
                    }
                }
                if word.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                let mask = word.iter().fold(0u16, |m, &i| m | (1 << i));
                out = &out + &Grassmann::monomial(mask, ca * cb * sign, g).unwrap();
            }
        }
        out
    }

    #[test]
    fn nilpotent_generator() {
        let t1 = theta(1, 4);
        assert!((&t1 * &t1).is_zero());
    }

    #[test]
    fn generators_anticommute() {
        let (t1, t2) = (theta(1, 4), theta(2, 4));
        assert_eq!(&t1 * &t2, -(&t2 * &t1));
        assert!(!(&t1 * &t2).is_zero());
    }

    #[test]
    fn one_plus_bivector_squared() {
        let g = 4;
        let x = &Grassmann::one(g) + &(&theta(1, g) * &theta(2, g));
        let sq = &x * &x;
        let expected = Grassmann::from_terms(g, [(0, c(1.0, 0.0)), (0b110, c(2.0, 0.0))]).unwrap();
        assert_eq!(sq, expected);
        assert_eq!(brute_product(&x, &x), expected);
    }

    #[test]
    fn mismatched_generators_rejected() {
        let a = Grassmann::one(2);
        let b = Grassmann::one(3);
        assert_eq!(
            a.try_mul(&b),
            Err(Error::GeneratorMismatch { left: 2, right: 3 })
        );
    }

    #[test]
    fn adjoint_examples() {
        let i1 = Grassmann::scalar(c(0.0, 1.0), 3);
        assert_eq!(i1.adjoint(), Grassmann::scalar(c(0.0, -1.0), 3));

        let t12 = &theta(1, 3) * &theta(2, 3);
        assert_eq!(t12.adjoint(), &theta(2, 3) * &theta(1, 3));
        assert_eq!(t12.adjoint(), -&t12);

        let x = theta(1, 3).scale(c(2.0, 3.0));
        assert_eq!(x.adjoint(), theta(1, 3).scale(c(2.0, -3.0)));
    }

    #[test]
    fn parity_examples() {
        let g = 4;
        let even = &Grassmann::one(g) + &(&theta(1, g) * &theta(2, g));
        assert_eq!(even.parity(), Parity::Even);
        assert_eq!(theta(3, g).parity(), Parity::Odd);
        assert_eq!((&Grassmann::one(g) + &theta(1, g)).parity(), Parity::Mixed);
        assert_eq!(Grassmann::zero(g).parity(), Parity::Even);
    }

    #[test]
    fn rejects_nan_and_oversized() {
        assert!(matches!(
            Grassmann::monomial(1, c(f64::NAN, 0.0), 2),
            Err(Error::NonFinite(_))
        ));
        assert_eq!(Grassmann::zero(0).generators(), 0);
        assert!(matches!(Grassmann::from_terms(13, []), Err(Error::TooManyGenerators(13))));
        assert!(Grassmann::monomial(0b100, c(1.0, 0.0), 2).is_err());
    }

    #[test]
    fn product_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for g in 0..=6u8 {
            for _ in 0..40 {
                let a = Grassmann::random(&mut rng, g, Parity::Mixed, 0.5);
                let b = Grassmann::random(&mut rng, g, Parity::Mixed, 0.5);
                let fast = &a * &b;
                let slow = brute_product(&a, &b);
                let diff = (&fast - &slow).norm_sqr().sqrt();
                assert!(diff <= 1e-12 * (1.0 + fast.norm_sqr().sqrt()), "g={g} diff={diff}");
            }
        }
    }

    #[test]
    fn graded_commutation_on_disjoint_monomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let g = 6;
            let pa = if rng.random::<bool>() { Parity::Even } else { Parity::Odd };
            let pb = if rng.random::<bool>() { Parity::Even } else { Parity::Odd };
            let a = Grassmann::random(&mut rng, g, pa, 0.3);
            let b = Grassmann::random(&mut rng, g, pb, 0.3);
            let sign = if pa == Parity::Odd && pb == Parity::Odd { -1.0 } else { 1.0 };
            let ab = &a * &b;
            let ba = (&b * &a).scale(c(sign, 0.0));
            assert!((&ab - &ba).norm_sqr() <= 1e-24 * (1.0 + ab.norm_sqr()));
        }
    }

    #[test]
    fn adjoint_reverses_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let g = rng.random_range(0..=6u8);
            let a = Grassmann::random(&mut rng, g, Parity::Mixed, 0.4);
            let b = Grassmann::random(&mut rng, g, Parity::Mixed, 0.4);
            let lhs = (&a * &b).adjoint();
            let rhs = &b.adjoint() * &a.adjoint();
            assert!((&lhs - &rhs).norm_sqr() <= 1e-24 * (1.0 + lhs.norm_sqr()));
            assert_eq!(a.adjoint().adjoint(), a);
        }
    }

    #[test]
    fn truncation_kills_long_odd_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in 1..=6u8 {
            let mut prod = Grassmann::one(g);
            for _ in 0..=g {
                prod = &prod * &Grassmann::random(&mut rng, g, Parity::Odd, 0.7);
            }
            assert!(prod.is_zero(), "g={g}");
        }
    }

    #[test]
    fn sign_table_small_cases() {
        assert_eq!(monomial_sign(0b01, 0b10), 1);
        assert_eq!(monomial_sign(0b10, 0b01), -1);
        assert_eq!(monomial_sign(0b11, 0b01), 0);
        // θ1θ2 · θ0 = θ0θ1θ2 after two swaps
        assert_eq!(monomial_sign(0b110, 0b001), 1);
    }
}
