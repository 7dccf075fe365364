//! Exact scalars: Gaussian rationals, Gaussian integers and sums of surds.
//!
//! Fock-basis matrix elements of ladder operators are square roots of
//! integers. A moment is accumulated as a sum `Σ q_d √d` over squarefree
//! radicands `d`; it is an exact Gaussian rational only when every `d ≠ 1`
//! coefficient cancels.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Complex number with rational real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct GaussianRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussianRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn from_real(re: BigRational) -> Self {
        Self { re, im: BigRational::zero() }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::from_real(BigRational::from_integer(n.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::from_real(BigRational::new(num.into(), den.into()))
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_integer(1)
    }

    pub fn i() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    /// Exact conversion of a finite float pair. Returns `None` for NaN/inf.
    pub fn from_complex64(z: Complex64) -> Option<Self> {
        Some(Self::new(BigRational::from_float(z.re)?, BigRational::from_float(z.im)?))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        Self::new(&self.re * k, &self.im * k)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm_sqr();
        Some(Self::new(&self.re / &n, -&self.im / &n))
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, -self.im.clone())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }
}

impl AddAssign<&GaussianRational> for GaussianRational {
    fn add_assign(&mut self, rhs: &GaussianRational) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

/// Lossy conversion that survives numerators and denominators beyond the f64 range.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = q.numer();
    let d = q.denom();
    let shift = n.bits().max(d.bits()).saturating_sub(1000) as usize;
    let n = (n >> shift).to_f64().unwrap_or(0.0);
    let d = (d >> shift).to_f64().unwrap_or(1.0);
    n / d
}

/// Complex number with integer parts, used by fraction-free elimination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct GaussianInteger {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussianInteger {
    pub fn one() -> Self {
        Self { re: BigInt::one(), im: BigInt::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }

    pub fn neg(&self) -> Self {
        Self { re: -self.re.clone(), im: -self.im.clone() }
    }

    /// Division known to be exact in Z[i] (Bareiss guarantees this).
    pub fn div_exact(&self, rhs: &Self) -> Self {
        let n = &rhs.re * &rhs.re + &rhs.im * &rhs.im;
        let re = &self.re * &rhs.re + &self.im * &rhs.im;
        let im = &self.im * &rhs.re - &self.re * &rhs.im;
        let (qr, rr) = re.div_rem(&n);
        let (qi, ri) = im.div_rem(&n);
        debug_assert!(rr.is_zero() && ri.is_zero(), "inexact Gaussian division");
        Self { re: qr, im: qi }
    }
}

/// Prime factorisation by trial division. Only used on small integers
/// (falling factorials of photon numbers).
fn factor_into(mut n: u64, exps: &mut BTreeMap<u64, u32>) {
    let mut p = 2u64;
    while p * p <= n {
        while n.is_multiple_of(p) {
            *exps.entry(p).or_default() += 1;
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        *exps.entry(n).or_default() += 1;
    }
}

/// `√(Π factors)` written as `outer · √radicand` with a squarefree radicand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub outer: BigInt,
    pub radicand: u64,
}

impl Surd {
    pub fn sqrt_of_product(factors: &[u64]) -> Self {
        if factors.contains(&0) {
            return Self { outer: BigInt::zero(), radicand: 1 };
        }
        let mut exps = BTreeMap::new();
        for &f in factors {
            factor_into(f, &mut exps);
        }
        let mut outer = BigInt::one();
        let mut radicand = 1u64;
        for (p, e) in exps {
            outer *= BigInt::from(p).pow(e / 2);
            if e % 2 == 1 {
                radicand *= p;
            }
        }
        Self { outer, radicand }
    }
}

/// `Σ coefficient_d · √d` over squarefree `d`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurdSum {
    terms: BTreeMap<u64, GaussianRational>,
}

impl SurdSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, coefficient: &GaussianRational, surd: &Surd) {
        if surd.outer.is_zero() || coefficient.is_zero() {
            return;
        }
        let scaled = coefficient.scale(&BigRational::from_integer(surd.outer.clone()));
        let slot = self.terms.entry(surd.radicand).or_default();
        *slot += &scaled;
        if slot.is_zero() {
            self.terms.remove(&surd.radicand);
        }
    }

    /// The radicands `d ≠ 1` whose coefficients survived.
    pub fn residual_radicands(&self) -> Vec<u64> {
        self.terms.keys().copied().filter(|&d| d != 1).collect()
    }

    /// Exact value, or the surviving radicands when it is irrational.
    pub fn to_rational(&self) -> Result<GaussianRational, Vec<u64>> {
        let residue = self.residual_radicands();
        if residue.is_empty() {
            Ok(self.terms.get(&1).cloned().unwrap_or_default())
        } else {
            Err(residue)
        }
    }

    pub fn to_complex64(&self) -> Complex64 {
        self.terms
            .iter()
            .map(|(&d, q)| q.to_complex64() * (d as f64).sqrt())
            .sum()
    }
}

/// Least common multiple of all denominators of a Gaussian-rational slice.
pub(crate) fn common_denominator<'a>(values: impl IntoIterator<Item = &'a GaussianRational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, z| {
        acc.lcm(z.re.denom()).lcm(z.im.denom())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surd_reduction() {
        // √(2·3·6) = 6
        let s = Surd::sqrt_of_product(&[2, 3, 6]);
        assert_eq!(s, Surd { outer: BigInt::from(6), radicand: 1 });
        // √(8) = 2√2
        let s = Surd::sqrt_of_product(&[8]);
        assert_eq!(s, Surd { outer: BigInt::from(2), radicand: 2 });
        assert_eq!(Surd::sqrt_of_product(&[]).radicand, 1);
        assert!(Surd::sqrt_of_product(&[5, 0]).outer.is_zero());
    }

    #[test]
    fn surd_sum_cancellation() {
        let mut acc = SurdSum::new();
        let r2 = Surd::sqrt_of_product(&[2]);
        acc.add_term(&GaussianRational::ratio(1, 2), &r2);
        assert_eq!(acc.to_rational(), Err(vec![2]));
        acc.add_term(&GaussianRational::ratio(-1, 2), &r2);
        acc.add_term(&GaussianRational::ratio(3, 4), &Surd::sqrt_of_product(&[4]));
        assert_eq!(acc.to_rational(), Ok(GaussianRational::ratio(3, 2)));
    }

    #[test]
    fn gaussian_integer_exact_division() {
        let a = GaussianInteger { re: 3.into(), im: 4.into() };
        let b = GaussianInteger { re: 1.into(), im: (-2).into() };
        let p = a.mul(&b);
        assert_eq!(p.div_exact(&b), a);
    }

    #[test]
    fn inverse_and_display() {
        let z = GaussianRational::new(BigRational::new(1.into(), 2.into()), BigRational::from_integer((-1).into()));
        let w = &z * &z.inv().unwrap();
        assert_eq!(w, GaussianRational::one());
        assert_eq!(z.to_string(), "1/2-1i");
        assert!(GaussianRational::zero().inv().is_none());
    }

    #[test]
    fn huge_rational_to_float() {
        let big = BigInt::from(10).pow(400);
        let q = BigRational::new(big.clone() * 3, big);
        assert!((rational_to_f64(&q) - 3.0).abs() < 1e-12);
    }
}
