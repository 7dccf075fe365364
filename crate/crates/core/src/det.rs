//! Determinant engines.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::exact::{common_denominator, GaussianInteger, GaussianRational};

/// Condition estimate above which a float determinant is flagged.
pub const CONDITION_WARNING: f64 = 1e8;

/// Exact determinant of a row-major `n × n` Gaussian-rational matrix.
///
/// Denominators are cleared first; the integer matrix is then reduced by
/// Bareiss' fraction-free elimination, where every division is exact.
pub fn det_exact(entries: &[GaussianRational], n: usize) -> GaussianRational {
    assert_eq!(entries.len(), n * n, "det_exact: expected {n}x{n} entries");
    if n == 0 {
        return GaussianRational::one();
    }
    let denom = common_denominator(entries);
    let mut m: Vec<GaussianInteger> = entries
        .iter()
        .map(|z| GaussianInteger {
            re: (&z.re * &denom).to_integer(),
            im: (&z.im * &denom).to_integer(),
        })
        .collect();
    let mut prev = GaussianInteger::one();
    let mut negate = false;
    for k in 0..n.saturating_sub(1) {
        if m[k * n + k].is_zero() {
            match (k + 1..n).find(|&r| !m[r * n + k].is_zero()) {
                Some(r) => {
                    for c in 0..n {
                        m.swap(k * n + c, r * n + c);
                    }
                    negate = !negate;
                }
                None => return GaussianRational::zero(),
            }
        }
        let pivot = m[k * n + k].clone();
        for i in k + 1..n {
            for j in k + 1..n {
                let v = m[i * n + j].mul(&pivot).sub(&m[i * n + k].mul(&m[k * n + j]));
                m[i * n + j] = v.div_exact(&prev);
            }
        }
        prev = pivot;
    }
    let mut det = m[n * n - 1].clone();
    if negate {
        det = det.neg();
    }
    let scale = BigRational::from_integer(denom.pow(n as u32));
    GaussianRational::new(
        BigRational::from_integer(det.re) / &scale,
        BigRational::from_integer(det.im) / &scale,
    )
}

/// Convenience for real rational matrices.
pub fn det_exact_real(entries: &[BigRational], n: usize) -> BigRational {
    let z: Vec<GaussianRational> = entries.iter().cloned().map(GaussianRational::from_real).collect();
    det_exact(&z, n).re
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloatDeterminant {
    pub value: Complex64,
    /// `max |U| / max |A|` from partially pivoted elimination.
    pub growth: f64,
    /// 1-norm condition number; infinite for an exactly singular factorisation.
    pub condition: f64,
    pub max_entry: f64,
    pub size: usize,
}

impl FloatDeterminant {
    /// Half-width of the band around zero: `tol · growth · max_entry^N`.
    pub fn zero_band(&self, tol: f64) -> f64 {
        tol * self.growth.max(1.0) * self.max_entry.powi(self.size as i32)
    }

    pub fn ill_conditioned(&self) -> bool {
        self.condition > CONDITION_WARNING
    }
}

/// LU determinant with partial pivoting, plus growth and condition estimates.
pub fn det_float(a: &DMatrix<Complex64>) -> FloatDeterminant {
    assert!(a.is_square(), "det_float: matrix must be square");
    let n = a.nrows();
    let max_entry = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if n == 0 {
        return FloatDeterminant { value: Complex64::new(1.0, 0.0), growth: 1.0, condition: 1.0, max_entry, size: 0 };
    }
    let mut m = a.clone();
    let mut det = Complex64::new(1.0, 0.0);
    let mut max_u = 0.0f64;
    let mut singular = false;
    for k in 0..n {
        let (piv, mag) = (k..n)
            .map(|r| (r, m[(r, k)].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if mag == 0.0 {
            singular = true;
            det = Complex64::zero();
            break;
        }
        if piv != k {
            m.swap_rows(piv, k);
            det = -det;
        }
        let p = m[(k, k)];
        det *= p;
        for j in k..n {
            max_u = max_u.max(m[(k, j)].norm());
        }
        for i in k + 1..n {
            let f = m[(i, k)] / p;
            for j in k..n {
                let v = m[(k, j)];
                m[(i, j)] -= f * v;
            }
        }
    }
    let growth = if max_entry > 0.0 { max_u / max_entry } else { 1.0 };
    let condition = if singular {
        f64::INFINITY
    } else {
        match a.clone().lu().try_inverse() {
            Some(inv) => one_norm(a) * one_norm(&inv),
            None => f64::INFINITY,
        }
    };
    FloatDeterminant { value: det, growth, condition, max_entry, size: n }
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignClass {
    Positive,
    Zero,
    Negative,
}

impl SignClass {
    pub fn of_rational(q: &BigRational) -> Self {
        if q.is_zero() {
            SignClass::Zero
        } else if q > &BigRational::zero() {
            SignClass::Positive
        } else {
            SignClass::Negative
        }
    }

    pub fn of_float(value: f64, band: f64) -> Self {
        if value.abs() <= band {
            SignClass::Zero
        } else if value > 0.0 {
            SignClass::Positive
        } else {
            SignClass::Negative
        }
    }

    pub fn symbol(&self) -> char {
        match self {
            SignClass::Positive => '+',
            SignClass::Zero => '0',
            SignClass::Negative => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(SignClass::Positive),
            '0' => Some(SignClass::Zero),
            '-' | '−' => Some(SignClass::Negative),
            _ => None,
        }
    }

    /// Parses strings like `"+++0 000"`; whitespace is ignored.
    pub fn parse_signature(s: &str) -> Option<Vec<SignClass>> {
        s.chars().filter(|c| !c.is_whitespace()).map(Self::from_symbol).collect()
    }

    pub fn format_signature(sig: &[SignClass]) -> String {
        sig.iter().map(SignClass::symbol).collect()
    }
}

impl fmt::Display for SignClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[cfg(test)]
pub(crate) fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gr(n: i64, d: i64) -> GaussianRational {
        GaussianRational::ratio(n, d)
    }

    #[test]
    fn two_by_two() {
        let m = [gr(1, 1), gr(-1, 2), gr(-1, 2), gr(0, 1)];
        assert_eq!(det_exact(&m, 2), gr(-1, 4));
    }

    #[test]
    fn identity_five() {
        let mut m = vec![GaussianRational::zero(); 25];
        for k in 0..5 {
            m[k * 5 + k] = GaussianRational::one();
        }
        assert_eq!(det_exact(&m, 5), GaussianRational::one());
    }

    #[test]
    fn pivoting_and_singular() {
        // [[0,1],[1,0]] needs a row swap.
        let m = [gr(0, 1), gr(1, 1), gr(1, 1), gr(0, 1)];
        assert_eq!(det_exact(&m, 2), gr(-1, 1));
        let z = [gr(0, 1), gr(1, 1), gr(0, 1), gr(3, 1)];
        assert_eq!(det_exact(&z, 2), GaussianRational::zero());
    }

    #[test]
    fn exact_matches_cofactor_expansion() {
        fn cofactor(m: &[GaussianRational], n: usize) -> GaussianRational {
            if n == 1 {
                return m[0].clone();
            }
            let mut acc = GaussianRational::zero();
            for c in 0..n {
                let minor: Vec<GaussianRational> = (1..n)
                    .flat_map(|r| (0..n).filter(move |&k| k != c).map(move |k| (r, k)))
                    .map(|(r, k)| m[r * n + k].clone())
                    .collect();
                let term = &m[c] * &cofactor(&minor, n - 1);
                acc = if c % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=5 {
            let m: Vec<GaussianRational> = (0..n * n)
                .map(|_| {
                    GaussianRational::new(
                        rational(rng.random_range(-5..=5), rng.random_range(1..=4)),
                        rational(rng.random_range(-3..=3), rng.random_range(1..=3)),
                    )
                })
                .collect();
            assert_eq!(det_exact(&m, n), cofactor(&m, n));
        }
    }

    #[test]
    fn float_examples() {
        let d = det_float(&DMatrix::from_row_slice(2, 2, &[
            Complex64::new(2.0, 0.0),
            Complex64::zero(),
            Complex64::zero(),
            Complex64::new(3.0, 0.0),
        ]));
        assert!((d.value - Complex64::new(6.0, 0.0)).norm() < 1e-12);
        // Rank one: v v†.
        let v = [Complex64::new(1.0, 0.5), Complex64::new(-0.3, 2.0), Complex64::new(0.7, 0.0)];
        let m = DMatrix::from_fn(3, 3, |r, c| v[r] * v[c].conj());
        let d = det_float(&m);
        assert!(d.value.norm() <= d.zero_band(1e-10));
        assert_eq!(SignClass::of_float(d.value.re, d.zero_band(1e-10)), SignClass::Zero);
    }

    #[test]
    fn hilbert_is_flagged() {
        let n = 8;
        let h = DMatrix::from_fn(n, n, |r, c| Complex64::new(1.0 / (r + c + 1) as f64, 0.0));
        let d = det_float(&h);
        assert!(d.ill_conditioned(), "condition {}", d.condition);
        let exact: Vec<BigRational> = (0..n * n).map(|k| rational(1, (k / n + k % n + 1) as i64)).collect();
        let e = crate::exact::rational_to_f64(&det_exact_real(&exact, n));
        assert!(((d.value.re - e) / e).abs() < 1e-3);
        let well = det_float(&DMatrix::<Complex64>::identity(4, 4));
        assert!(!well.ill_conditioned());
    }

    #[test]
    fn signature_parsing() {
        let sig = SignClass::parse_signature("+++0 0−").unwrap();
        assert_eq!(SignClass::format_signature(&sig), "+++00-");
        assert!(SignClass::parse_signature("+x").is_none());
    }
}
