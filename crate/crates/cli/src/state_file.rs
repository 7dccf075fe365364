//! JSON state descriptions.
//!
//! ```json
//! { "kind": "fock",
//!   "terms": [ { "amplitude": ["1", "0"], "n_a": 0, "n_b": 1 },
//!              { "amplitude": ["-1", "0"], "n_a": 1, "n_b": 0 } ] }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. Each part is a decimal string
//! (`"0.25"`, `"-1e-3"`), a rational string (`"1/3"`) or a JSON number; strings
//! are read exactly.

use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use ppt_moments::fock::{product_dim, TruncatedDensityMatrix};
use ppt_moments::{BipartiteState, CoherentSuperposition, FockSuperposition, GaussianRational};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum StateDoc {
    Fock {
        terms: Vec<FockTermDoc>,
        #[serde(default)]
        cutoff: Option<CutoffDoc>,
    },
    Coherent {
        terms: Vec<CoherentTermDoc>,
        #[serde(default)]
        cutoff: Option<CutoffDoc>,
    },
    Density {
        cutoff: CutoffDoc,
        matrix: Vec<Vec<[Value; 2]>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FockTermDoc {
    amplitude: [Value; 2],
    n_a: u32,
    n_b: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoherentTermDoc {
    amplitude: [Value; 2],
    alpha: [Value; 2],
    beta: [Value; 2],
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CutoffDoc {
    Both(u32),
    Each([u32; 2]),
}

impl CutoffDoc {
    fn pair(&self) -> (u32, u32) {
        match *self {
            CutoffDoc::Both(c) => (c, c),
            CutoffDoc::Each([a, b]) => (a, b),
        }
    }
}

/// A parsed state plus the cutoffs the file asked for, if any.
#[derive(Debug)]
pub struct LoadedState {
    pub state: BipartiteState,
    pub cutoff: Option<(u32, u32)>,
}

pub fn load(path: &Path) -> Result<LoadedState> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read state file {}", path.display()))?;
    parse(&text).with_context(|| format!("invalid state file {}", path.display()))
}

pub fn parse(text: &str) -> Result<LoadedState> {
    let doc: StateDoc = serde_json::from_str(text)?;
    match doc {
        StateDoc::Fock { terms, cutoff } => {
            let terms = terms
                .iter()
                .enumerate()
                .map(|(k, t)| Ok((exact_complex(&t.amplitude).with_context(|| format!("term {k}"))?, t.n_a, t.n_b)))
                .collect::<Result<Vec<_>>>()?;
            let psi = FockSuperposition::new(terms)?;
            Ok(LoadedState { state: psi.into(), cutoff: cutoff.map(|c| c.pair()) })
        }
        StateDoc::Coherent { terms, cutoff } => {
            let terms = terms
                .iter()
                .enumerate()
                .map(|(k, t)| {
                    let f = |v: &[Value; 2]| float_complex(v).with_context(|| format!("term {k}"));
                    Ok((f(&t.amplitude)?, f(&t.alpha)?, f(&t.beta)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let psi = CoherentSuperposition::new(terms)?;
            Ok(LoadedState { state: psi.into(), cutoff: cutoff.map(|c| c.pair()) })
        }
        StateDoc::Density { cutoff, matrix } => {
            let (ca, cb) = cutoff.pair();
            let dim = product_dim(ca, cb);
            if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
                bail!("density matrix must be {dim}x{dim} for cutoffs ({ca}, {cb})");
            }
            let entries = matrix
                .iter()
                .enumerate()
                .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, z)| (r, c, z)))
                .map(|(r, c, z)| exact_complex(z).with_context(|| format!("matrix entry ({r}, {c})")))
                .collect::<Result<Vec<_>>>()?;
            let rho = TruncatedDensityMatrix::from_exact(ca, cb, entries)?;
            Ok(LoadedState { state: rho.into(), cutoff: Some((ca, cb)) })
        }
    }
}

fn exact_complex(z: &[Value; 2]) -> Result<GaussianRational> {
    Ok(GaussianRational::new(exact_part(&z[0])?, exact_part(&z[1])?))
}

fn float_complex(z: &[Value; 2]) -> Result<Complex64> {
    Ok(exact_complex(z)?.to_complex64())
}

fn exact_part(v: &Value) -> Result<BigRational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => parse_rational(&n.to_string()),
        other => Err(anyhow!("expected a number or numeric string, found {other}")),
    }
}

/// Exact value of `"p/q"`, an integer, or a decimal with optional exponent.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || anyhow!("`{s}` is not a decimal or rational number");
    if s.contains('/') {
        let q = BigRational::from_str(s).map_err(|_| bad())?;
        return Ok(q);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let numer = BigInt::from_str(&format!("0{int}{frac}")).map_err(|_| bad())?;
    let scale = exponent - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let q = BigRational::from_integer(numer);
    let factor = (0..scale.unsigned_abs()).fold(BigRational::one(), |acc, _| acc * &ten);
    let q = if scale >= 0 { q * factor } else { q / factor };
    Ok(if negative { -q } else { q })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rational_strings() {
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-1/3").unwrap(), q(-1, 3));
        assert_eq!(parse_rational("-1.5e-2").unwrap(), q(-3, 200));
        assert_eq!(parse_rational("2E3").unwrap(), q(2000, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("0.1").unwrap(), q(1, 10));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn fock_file() {
        let s = parse(r#"{"kind":"fock","terms":[
            {"amplitude":["1","0"],"n_a":0,"n_b":1},
            {"amplitude":[-1,0],"n_a":1,"n_b":0}]}"#)
        .unwrap();
        assert!(matches!(s.state, BipartiteState::Fock(_)));
        assert_eq!(s.state.fingerprint(), BipartiteState::from(ppt_moments::make_singlet()).fingerprint());
    }

    #[test]
    fn rejects_zero_norm() {
        let err = parse(r#"{"kind":"fock","terms":[{"amplitude":["0","0"],"n_a":0,"n_b":0}]}"#).unwrap_err();
        assert!(format!("{err:#}").contains("degenerate"), "{err:#}");
    }

    #[test]
    fn density_file() {
        let s = parse(r#"{"kind":"density","cutoff":[0,1],"matrix":[
            [["1/2","0"],["0","0"]],
            [["0","0"],["1/2","0"]]]}"#)
        .unwrap();
        assert_eq!(s.cutoff, Some((0, 1)));
        let bad = parse(r#"{"kind":"density","cutoff":0,"matrix":[[["1","0"],["0","0"]]]}"#);
        assert!(bad.is_err());
    }
}
