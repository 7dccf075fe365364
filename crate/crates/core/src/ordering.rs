//! Multi-indices `(i1, i2, i3, i4)` labelling `â†^i1 â^i2 b̂†^i3 b̂^i4`, and the
//! enumerations that fix the row/column order of a moment matrix.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex {
    pub a_dag: u32,
    pub a: u32,
    pub b_dag: u32,
    pub b: u32,
}

impl MultiIndex {
    pub const IDENTITY: MultiIndex = MultiIndex::new(0, 0, 0, 0);

    pub const fn new(a_dag: u32, a: u32, b_dag: u32, b: u32) -> Self {
        Self { a_dag, a, b_dag, b }
    }

    pub fn degree(&self) -> u32 {
        self.a_dag + self.a + self.b_dag + self.b
    }

    pub fn as_array(&self) -> [u32; 4] {
        [self.a_dag, self.a, self.b_dag, self.b]
    }

    /// All multi-indices of the given degree in lexicographic order.
    pub fn of_degree(degree: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for i1 in 0..=degree {
            for i2 in 0..=degree - i1 {
                for i3 in 0..=degree - i1 - i2 {
                    out.push(MultiIndex::new(i1, i2, i3, degree - i1 - i2 - i3));
                }
            }
        }
        out
    }
}

impl From<[u32; 4]> for MultiIndex {
    fn from(v: [u32; 4]) -> Self {
        MultiIndex::new(v[0], v[1], v[2], v[3])
    }
}

/// Operator-word form, e.g. `1`, `a b`, `a† a`, `b†^2`.
impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == MultiIndex::IDENTITY {
            return f.write_str("1");
        }
        let parts = [(self.a_dag, "a†"), (self.a, "a"), (self.b_dag, "b†"), (self.b, "b")];
        let words: Vec<String> = parts
            .iter()
            .filter(|(p, _)| *p > 0)
            .map(|&(p, sym)| if p == 1 { sym.to_string() } else { format!("{sym}^{p}") })
            .collect();
        f.write_str(&words.join(" "))
    }
}

/// Parses the operator-word form. `a+`/`b+` are accepted for `a†`/`b†`.
impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "1" {
            return Ok(MultiIndex::IDENTITY);
        }
        let mut powers = [0u32; 4];
        let mut last_slot = None;
        for token in s.split_whitespace() {
            let (base, power) = match token.split_once('^') {
                Some((b, p)) => (
                    b,
                    p.parse::<u32>()
                        .map_err(|_| Error::InvalidOrdering(format!("bad power in `{token}`")))?,
                ),
                None => (token, 1),
            };
            let slot = match base {
                "a†" | "a+" => 0,
                "a" => 1,
                "b†" | "b+" => 2,
                "b" => 3,
                _ => return Err(Error::InvalidOrdering(format!("unknown factor `{token}`"))),
            };
            if last_slot.is_some_and(|l| l >= slot) {
                return Err(Error::InvalidOrdering(format!(
                    "`{s}` is not of the form a†^i1 a^i2 b†^i3 b^i4"
                )));
            }
            last_slot = Some(slot);
            powers[slot] = power;
        }
        if last_slot.is_none() {
            return Err(Error::InvalidOrdering("empty operator word".into()));
        }
        Ok(powers.into())
    }
}

/// Row/column enumeration of a moment matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorOrdering {
    name: String,
    sequence: Vec<MultiIndex>,
}

pub const SV_COMPATIBLE: &str = "sv-compatible";
pub const GRLEX: &str = "grlex";

impl OperatorOrdering {
    /// Validates: starts at the identity, no repeats, non-decreasing degree.
    pub fn new(name: impl Into<String>, sequence: Vec<MultiIndex>) -> Result<Self> {
        if sequence.first() != Some(&MultiIndex::IDENTITY) {
            return Err(Error::InvalidOrdering("first element must be the identity".into()));
        }
        let mut seen = HashSet::new();
        for w in &sequence {
            if !seen.insert(*w) {
                return Err(Error::InvalidOrdering(format!("duplicate element {w}")));
            }
        }
        if sequence.windows(2).any(|p| p[1].degree() < p[0].degree()) {
            return Err(Error::InvalidOrdering("degrees must be non-decreasing".into()));
        }
        Ok(Self { name: name.into(), sequence })
    }

    /// Identity, then `â, â†, b̂, b̂†`, then `â†â, b̂†b̂, âb̂, â†b̂, âb̂†, â†b̂†, â², â†², b̂², b̂†²`,
    /// then every higher degree lexicographically. Contains at least `min_len` elements.
    pub fn sv_compatible(min_len: usize) -> Self {
        let mut sequence = vec![
            MultiIndex::IDENTITY,
            MultiIndex::new(0, 1, 0, 0),
            MultiIndex::new(1, 0, 0, 0),
            MultiIndex::new(0, 0, 0, 1),
            MultiIndex::new(0, 0, 1, 0),
            MultiIndex::new(1, 1, 0, 0),
            MultiIndex::new(0, 0, 1, 1),
            MultiIndex::new(0, 1, 0, 1),
            MultiIndex::new(1, 0, 0, 1),
            MultiIndex::new(0, 1, 1, 0),
            MultiIndex::new(1, 0, 1, 0),
            MultiIndex::new(0, 2, 0, 0),
            MultiIndex::new(2, 0, 0, 0),
            MultiIndex::new(0, 0, 0, 2),
            MultiIndex::new(0, 0, 2, 0),
        ];
        let mut degree = 3;
        while sequence.len() < min_len {
            sequence.extend(MultiIndex::of_degree(degree));
            degree += 1;
        }
        Self { name: SV_COMPATIBLE.into(), sequence }
    }

    /// Graded lexicographic order.
    pub fn grlex(min_len: usize) -> Self {
        let mut sequence = Vec::new();
        let mut degree = 0;
        while sequence.len() < min_len.max(1) {
            sequence.extend(MultiIndex::of_degree(degree));
            degree += 1;
        }
        Self { name: GRLEX.into(), sequence }
    }

    pub fn by_name(name: &str, min_len: usize) -> Result<Self> {
        match name {
            SV_COMPATIBLE => Ok(Self::sv_compatible(min_len)),
            GRLEX => Ok(Self::grlex(min_len)),
            other => Err(Error::InvalidOrdering(format!("unknown ordering `{other}`"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sequence(&self) -> &[MultiIndex] {
        &self.sequence
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<MultiIndex> {
        self.sequence.get(k).copied()
    }

    /// Zero-based position of `w`.
    pub fn position(&self, w: &MultiIndex) -> Option<usize> {
        self.sequence.iter().position(|x| x == w)
    }

    /// The first `n` elements under the same name.
    pub fn truncated(&self, n: usize) -> Self {
        Self { name: self.name.clone(), sequence: self.sequence[..n.min(self.len())].to_vec() }
    }

    pub fn words(&self) -> Vec<String> {
        self.sequence.iter().map(ToString::to_string).collect()
    }

    /// Contiguous `[start, end)` ranges of equal degree.
    pub fn degree_blocks(&self) -> Vec<(usize, usize)> {
        let mut blocks = Vec::new();
        let mut start = 0;
        for k in 1..=self.len() {
            if k == self.len() || self.sequence[k].degree() != self.sequence[start].degree() {
                blocks.push((start, k));
                start = k;
            }
        }
        blocks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sv_compatible_through_degree_two() {
        let o = OperatorOrdering::sv_compatible(15);
        assert_eq!(o.len(), 15);
        assert_eq!(o.words()[..8], ["1", "a", "a†", "b", "b†", "a† a", "b† b", "a b"]);
        assert_eq!(o.degree_blocks(), vec![(0, 1), (1, 5), (5, 15)]);
        assert!(OperatorOrdering::new("copy", o.sequence().to_vec()).is_ok());
        let longer = OperatorOrdering::sv_compatible(16);
        assert_eq!(longer.len(), 35);
        assert_eq!(longer.get(15), Some(MultiIndex::new(0, 0, 0, 3)));
    }

    #[test]
    fn grlex_counts() {
        let o = OperatorOrdering::grlex(15);
        assert_eq!(o.len(), 15);
        assert_eq!(o.get(1), Some(MultiIndex::new(0, 0, 0, 1)));
        let mut sorted = o.sequence().to_vec();
        sorted.sort_by_key(|w| (w.degree(), *w));
        assert_eq!(sorted, o.sequence());
    }

    #[test]
    fn ordering_validation() {
        let id = MultiIndex::IDENTITY;
        let a = MultiIndex::new(0, 1, 0, 0);
        let ab = MultiIndex::new(0, 1, 0, 1);
        assert!(OperatorOrdering::new("x", vec![a, id]).is_err());
        assert!(OperatorOrdering::new("x", vec![id, a, a]).is_err());
        assert!(OperatorOrdering::new("x", vec![id, ab, a]).is_err());
        assert!(OperatorOrdering::new("x", vec![id, a, ab]).is_ok());
        assert!(OperatorOrdering::by_name("nope", 3).is_err());
    }

    #[test]
    fn word_round_trip() {
        for w in OperatorOrdering::grlex(70).sequence() {
            let parsed: MultiIndex = w.to_string().parse().unwrap();
            assert_eq!(parsed, *w);
        }
        assert_eq!("a+ b".parse::<MultiIndex>().unwrap(), MultiIndex::new(1, 0, 0, 1));
        assert!("b a".parse::<MultiIndex>().is_err());
        assert!("c".parse::<MultiIndex>().is_err());
    }
}
