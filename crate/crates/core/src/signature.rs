//! Search for a graded ordering with a prescribed leading-minor signature.
//!
//! A leading minor depends only on the *set* of operators in the leading
//! block, so the search walks prefix sets depth-first, permuting elements
//! within each degree block, and memoises both determinant signs and prefix
//! sets already known to be dead ends.

use std::collections::{HashMap, HashSet};

use crate::det::SignClass;
use crate::error::{Error, Result};
use crate::fock::BipartiteState;
use crate::minors::{leading_minor_scan, principal_minor, IndexSubset, MinorReport};
use crate::moments::{Backend, MomentEngine, MomentMatrix};
use crate::ordering::OperatorOrdering;

pub const MAX_SIGNATURE_LEN: usize = 15;
pub const DEFAULT_SEARCH_BUDGET: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SignatureMatch {
    pub ordering: OperatorOrdering,
    /// Leading-minor table of the matched ordering over `min(15, len)` operators.
    pub scan: Vec<MinorReport>,
    /// Distinct prefix sets whose determinant was evaluated.
    pub examined: usize,
}

impl SignatureMatch {
    pub fn signature(&self) -> Vec<SignClass> {
        self.scan.iter().map(|r| r.sign).collect()
    }
}

struct Search<'m> {
    matrix: &'m MomentMatrix,
    blocks: Vec<(usize, usize)>,
    target: &'m [SignClass],
    tol: f64,
    budget: usize,
    signs: HashMap<u64, SignClass>,
    dead: HashSet<u64>,
}

impl Search<'_> {
    fn sign(&mut self, mask: u64) -> Result<SignClass> {
        if let Some(&s) = self.signs.get(&mask) {
            return Ok(s);
        }
        if self.signs.len() >= self.budget {
            return Err(Error::NoMatchingOrdering { examined: self.signs.len() });
        }
        let idx: Vec<usize> = (0..64).filter(|k| mask & (1 << k) != 0).collect();
        let r = principal_minor(self.matrix, &IndexSubset::from_zero_based(&idx), self.tol)?;
        self.signs.insert(mask, r.sign);
        Ok(r.sign)
    }

    fn dfs(&mut self, chosen: &mut Vec<usize>, mask: u64) -> Result<bool> {
        let pos = chosen.len();
        if pos == self.target.len() {
            return Ok(true);
        }
        let &(start, end) = self.blocks.iter().find(|(s, e)| (*s..*e).contains(&pos)).expect("position inside a block");
        for cand in start..end {
            let next = mask | (1 << cand);
            if next == mask || self.dead.contains(&next) {
                continue;
            }
            if self.sign(next)? != self.target[pos] {
                continue;
            }
            chosen.push(cand);
            if self.dfs(chosen, next)? {
                return Ok(true);
            }
            chosen.pop();
            self.dead.insert(next);
        }
        Ok(false)
    }
}

/// Finds the first ordering (in within-block lexicographic order of the base
/// ordering) whose leading minors of `M(ρ^Γ)` have the target signs.
pub fn ordering_signature_search(
    state: &BipartiteState,
    base: &OperatorOrdering,
    target: &[SignClass],
    budget: usize,
    backend: Backend,
    tol: f64,
) -> Result<SignatureMatch> {
    let width = base.len().min(MAX_SIGNATURE_LEN);
    if target.is_empty() || target.len() > width {
        return Err(Error::InvalidArgument(format!(
            "signature length must be between 1 and {width}, got {}",
            target.len()
        )));
    }
    let window = base.truncated(width);
    let engine = MomentEngine::new(state, backend);
    let matrix = engine.matrix(&window, width, true)?;
    let mut search = Search {
        matrix: &matrix,
        blocks: window.degree_blocks(),
        target,
        tol,
        budget,
        signs: HashMap::new(),
        dead: HashSet::new(),
    };
    let mut chosen = Vec::new();
    if !search.dfs(&mut chosen, 0)? {
        return Err(Error::NoMatchingOrdering { examined: search.signs.len() });
    }
    let examined = search.signs.len();

    // Fill the rest of the window block by block in base order, then keep the tail.
    let mut sequence: Vec<_> = chosen.iter().map(|&k| window.sequence()[k]).collect();
    for k in 0..width {
        if !chosen.contains(&k) {
            sequence.push(window.sequence()[k]);
        }
    }
    sequence.extend_from_slice(&base.sequence()[width..]);
    let name = if sequence == base.sequence() { base.name().to_string() } else { format!("{}+searched", base.name()) };
    let ordering = OperatorOrdering::new(name, sequence)?;
    let scan = leading_minor_scan(&engine.matrix(&ordering, width, true)?, width, tol)?;
    Ok(SignatureMatch { ordering, scan, examined })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::make_singlet;
    use crate::minors::DEFAULT_TOLERANCE;

    fn run(sig: &str) -> Result<SignatureMatch> {
        let s: BipartiteState = make_singlet().into();
        ordering_signature_search(
            &s,
            &OperatorOrdering::sv_compatible(15),
            &SignClass::parse_signature(sig).unwrap(),
            DEFAULT_SEARCH_BUDGET,
            Backend::Exact,
            DEFAULT_TOLERANCE,
        )
    }

    #[test]
    fn trivial_signature_keeps_default() {
        let m = run("+").unwrap();
        assert_eq!(m.ordering, OperatorOrdering::sv_compatible(15));
    }

    #[test]
    fn negative_first_minor_is_impossible() {
        assert!(matches!(run("-"), Err(Error::NoMatchingOrdering { .. })));
    }

    #[test]
    fn reproduces_seven_positive_then_zero() {
        let m = run("+++++++00000000").unwrap();
        assert_eq!(SignClass::format_signature(&m.signature()), "+++++++00000000");
        let seq = m.ordering.sequence();
        assert!(seq.windows(2).all(|w| w[0].degree() <= w[1].degree()));
        // Deterministic.
        assert_eq!(run("+++++++00000000").unwrap(), m);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert!(matches!(run("++++++++++++++++"), Err(Error::InvalidArgument(_))));
    }
}
