//! Two-mode bosonic states and truncated Fock-space linear algebra.
//!
//! The product basis is ordered row-major with the mode-a occupation as the
//! slow index: `|n_a n_b⟩ ↦ n_a·(cutoff_b + 1) + n_b`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::{rational_to_f64, GaussianRational};

/// Discarded weight above which truncation is refused.
pub const DEFAULT_DISCARD_THRESHOLD: f64 = 1e-12;

/// Tolerance used when validating float density matrices.
pub const DENSITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::A => "a",
            Mode::B => "b",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FockTerm {
    pub amplitude: GaussianRational,
    pub n_a: u32,
    pub n_b: u32,
}

/// Finite superposition `Σ c |n_a n_b⟩`.
///
/// Amplitudes are kept exactly as given; the squared norm is stored
/// separately so that `1/√2`-style normalisations stay rational.
#[derive(Clone, Debug, PartialEq)]
pub struct FockSuperposition {
    terms: Vec<FockTerm>,
    norm_sqr: BigRational,
}

impl FockSuperposition {
    /// Merges repeated kets and drops zero amplitudes.
    pub fn new(terms: impl IntoIterator<Item = (GaussianRational, u32, u32)>) -> Result<Self> {
        let mut merged: BTreeMap<(u32, u32), GaussianRational> = BTreeMap::new();
        for (amp, n_a, n_b) in terms {
            *merged.entry((n_a, n_b)).or_default() += &amp;
        }
        let terms: Vec<FockTerm> = merged
            .into_iter()
            .filter(|(_, amp)| !amp.is_zero())
            .map(|((n_a, n_b), amplitude)| FockTerm { amplitude, n_a, n_b })
            .collect();
        let norm_sqr = terms
            .iter()
            .fold(BigRational::zero(), |acc, t| acc + t.amplitude.norm_sqr());
        if norm_sqr.is_zero() {
            return Err(Error::DegenerateState("Fock superposition has zero norm".into()));
        }
        Ok(Self { terms, norm_sqr })
    }

    pub fn basis(n_a: u32, n_b: u32) -> Self {
        Self::new([(GaussianRational::one(), n_a, n_b)]).expect("basis state is normalizable")
    }

    pub fn terms(&self) -> &[FockTerm] {
        &self.terms
    }

    /// Squared norm of the raw amplitudes.
    pub fn norm_sqr(&self) -> &BigRational {
        &self.norm_sqr
    }

    /// Normalised amplitudes in float form.
    pub fn normalized_terms(&self) -> Vec<(Complex64, u32, u32)> {
        let scale = rational_to_f64(&self.norm_sqr).sqrt();
        self.terms
            .iter()
            .map(|t| (t.amplitude.to_complex64() / scale, t.n_a, t.n_b))
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.normalized_terms()
            .iter()
            .map(|(c, _, _)| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨n_a n_b|ψ⟩` for the normalised state.
    pub fn overlap_basis(&self, n_a: u32, n_b: u32) -> Complex64 {
        self.normalized_terms()
            .into_iter()
            .find(|&(_, a, b)| a == n_a && b == n_b)
            .map(|(c, _, _)| c)
            .unwrap_or_default()
    }

    pub fn max_occupation(&self) -> (u32, u32) {
        self.terms
            .iter()
            .fold((0, 0), |(a, b), t| (a.max(t.n_a), b.max(t.n_b)))
    }
}

/// `(|01⟩ − |10⟩)/√2`.
pub fn make_singlet() -> FockSuperposition {
    FockSuperposition::new([
        (GaussianRational::one(), 0, 1),
        (GaussianRational::from_integer(-1), 1, 0),
    ])
    .expect("singlet is normalizable")
}

/// `(|00⟩ + |11⟩)/√2`.
pub fn make_bell_phi() -> FockSuperposition {
    FockSuperposition::new([(GaussianRational::one(), 0, 0), (GaussianRational::one(), 1, 1)])
        .expect("bell state is normalizable")
}

/// `⟨α|β⟩` for single-mode coherent states.
pub fn coherent_overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    (-0.5 * alpha.norm_sqr() - 0.5 * beta.norm_sqr() + alpha.conj() * beta).exp()
}

/// Smallest cutoff the truncation-adequacy rule accepts for amplitude `alpha`.
pub fn adequate_cutoff(alpha: Complex64) -> u32 {
    let n = alpha.norm_sqr();
    (n + 8.0 * n.max(1.0).sqrt() + 10.0).ceil() as u32
}

/// `e^{-|α|²/2} α^n / √n!`.
pub fn coherent_fock_amplitude(alpha: Complex64, n: u32) -> Complex64 {
    let mut amp = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 1..=n {
        amp *= alpha / (k as f64).sqrt();
    }
    amp
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoherentTerm {
    pub amplitude: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

/// Finite superposition `Σ c |α, β⟩` of two-mode coherent states.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentSuperposition {
    terms: Vec<CoherentTerm>,
    norm_sqr: f64,
}

impl CoherentSuperposition {
    pub fn new(terms: impl IntoIterator<Item = (Complex64, Complex64, Complex64)>) -> Result<Self> {
        let terms: Vec<CoherentTerm> = terms
            .into_iter()
            .map(|(amplitude, alpha, beta)| CoherentTerm { amplitude, alpha, beta })
            .collect();
        if terms.is_empty() {
            return Err(Error::DegenerateState("coherent superposition has no terms".into()));
        }
        let scale: f64 = terms.iter().map(|t| t.amplitude.norm_sqr()).sum();
        let mut norm_sqr = Complex64::zero();
        for k in &terms {
            for l in &terms {
                norm_sqr += k.amplitude.conj()
                    * l.amplitude
                    * coherent_overlap(k.alpha, l.alpha)
                    * coherent_overlap(k.beta, l.beta);
            }
        }
        if !(norm_sqr.re > 1e-12 * scale) {
            return Err(Error::DegenerateState(format!(
                "coherent superposition norm² = {:.3e}",
                norm_sqr.re
            )));
        }
        Ok(Self { terms, norm_sqr: norm_sqr.re })
    }

    pub fn product(alpha: Complex64, beta: Complex64) -> Self {
        Self::new([(Complex64::one(), alpha, beta)]).expect("coherent product state is normalizable")
    }

    pub fn terms(&self) -> &[CoherentTerm] {
        &self.terms
    }

    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    pub fn normalized_terms(&self) -> Vec<CoherentTerm> {
        let scale = self.norm_sqr.sqrt();
        self.terms
            .iter()
            .map(|t| CoherentTerm { amplitude: t.amplitude / scale, ..t.clone() })
            .collect()
    }

    /// Norm recomputed from coherent overlaps of the normalised terms.
    pub fn norm(&self) -> f64 {
        let terms = self.normalized_terms();
        let mut acc = Complex64::zero();
        for k in &terms {
            for l in &terms {
                acc += k.amplitude.conj()
                    * l.amplitude
                    * coherent_overlap(k.alpha, l.alpha)
                    * coherent_overlap(k.beta, l.beta);
            }
        }
        acc.re.sqrt()
    }

    /// Cutoffs satisfying the adequacy rule for every branch.
    pub fn adequate_cutoffs(&self) -> (u32, u32) {
        self.terms.iter().fold((0, 0), |(a, b), t| {
            (a.max(adequate_cutoff(t.alpha)), b.max(adequate_cutoff(t.beta)))
        })
    }

    /// Normalised amplitude on `|n_a n_b⟩`.
    pub fn fock_amplitude(&self, n_a: u32, n_b: u32) -> Complex64 {
        self.normalized_terms()
            .iter()
            .map(|t| {
                t.amplitude * coherent_fock_amplitude(t.alpha, n_a) * coherent_fock_amplitude(t.beta, n_b)
            })
            .sum()
    }
}

/// `c(|α,β⟩ − |−α,−β⟩)` with `c = [2 − 2e^{−2|α|²−2|β|²}]^{−1/2}`.
pub fn make_coherent_bell(alpha: Complex64, beta: Complex64) -> Result<CoherentSuperposition> {
    if alpha.is_zero() && beta.is_zero() {
        return Err(Error::DegenerateState(
            "|0,0⟩ − |0,0⟩ vanishes; α and β cannot both be zero".into(),
        ));
    }
    CoherentSuperposition::new([
        (Complex64::one(), alpha, beta),
        (-Complex64::one(), -alpha, -beta),
    ])
}

/// Hermitian, unit-trace, positive matrix on the truncated product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedDensityMatrix {
    cutoff_a: u32,
    cutoff_b: u32,
    entries: DMatrix<Complex64>,
    exact: Option<Vec<GaussianRational>>,
    discarded_weight: f64,
}

impl TruncatedDensityMatrix {
    /// Validates a float matrix. Renormalises by the trace.
    pub fn from_entries(cutoff_a: u32, cutoff_b: u32, entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = product_dim(cutoff_a, cutoff_b);
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::InvalidState(format!(
                "density matrix must be {dim}x{dim} for cutoffs ({cutoff_a}, {cutoff_b})"
            )));
        }
        let trace = entries.trace();
        if !(trace.re > DENSITY_TOLERANCE) || trace.im.abs() > DENSITY_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {trace} is not positive")));
        }
        let entries = entries.map(|z| z / trace.re);
        let rho = Self { cutoff_a, cutoff_b, entries, exact: None, discarded_weight: 0.0 };
        rho.validate()?;
        Ok(rho)
    }

    /// Exact entries, row-major. Hermiticity is checked exactly.
    pub fn from_exact(cutoff_a: u32, cutoff_b: u32, exact: Vec<GaussianRational>) -> Result<Self> {
        let dim = product_dim(cutoff_a, cutoff_b);
        if exact.len() != dim * dim {
            return Err(Error::InvalidState(format!(
                "density matrix must have {} entries for cutoffs ({cutoff_a}, {cutoff_b})",
                dim * dim
            )));
        }
        for r in 0..dim {
            for c in r..dim {
                if exact[r * dim + c] != exact[c * dim + r].conj() {
                    return Err(Error::InvalidState(format!("entry ({r}, {c}) breaks Hermiticity")));
                }
            }
        }
        let trace = (0..dim).fold(BigRational::zero(), |acc, k| acc + &exact[k * dim + k].re);
        if trace <= BigRational::zero() {
            return Err(Error::InvalidState("trace is not positive".into()));
        }
        let exact: Vec<GaussianRational> = exact.iter().map(|z| z.scale(&trace.recip())).collect();
        let entries = DMatrix::from_fn(dim, dim, |r, c| exact[r * dim + c].to_complex64());
        let rho = Self { cutoff_a, cutoff_b, entries, exact: Some(exact), discarded_weight: 0.0 };
        rho.validate()?;
        Ok(rho)
    }

    fn validate(&self) -> Result<()> {
        let herm = (&self.entries - self.entries.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > DENSITY_TOLERANCE {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let min = self.entries.clone().symmetric_eigenvalues().min();
        if min < -DENSITY_TOLERANCE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn cutoffs(&self) -> (u32, u32) {
        (self.cutoff_a, self.cutoff_b)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn exact_entries(&self) -> Option<&[GaussianRational]> {
        self.exact.as_deref()
    }

    /// `1 − trace` of the projected state before renormalisation.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub fn index(&self, n_a: u32, n_b: u32) -> usize {
        basis_index(self.cutoff_b, n_a, n_b)
    }

    pub fn get(&self, ket: (u32, u32), bra: (u32, u32)) -> Complex64 {
        self.entries[(self.index(ket.0, ket.1), self.index(bra.0, bra.1))]
    }
}

pub fn product_dim(cutoff_a: u32, cutoff_b: u32) -> usize {
    (cutoff_a as usize + 1) * (cutoff_b as usize + 1)
}

pub fn basis_index(cutoff_b: u32, n_a: u32, n_b: u32) -> usize {
    n_a as usize * (cutoff_b as usize + 1) + n_b as usize
}

/// A two-mode state in one of the supported representations.
#[derive(Clone, Debug, PartialEq)]
pub enum BipartiteState {
    Fock(FockSuperposition),
    Coherent(CoherentSuperposition),
    Density(TruncatedDensityMatrix),
}

impl BipartiteState {
    /// Stable short hash of the state's contents.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(format!("{self:?}").as_bytes());
        hex::encode(&digest[..8])
    }

    /// Whether the state lives on finitely many Fock states.
    pub fn has_finite_support(&self) -> bool {
        !matches!(self, BipartiteState::Coherent(_))
    }

    /// Cutoffs at which the state is represented faithfully.
    pub fn natural_cutoffs(&self) -> (u32, u32) {
        match self {
            BipartiteState::Fock(s) => s.max_occupation(),
            BipartiteState::Coherent(s) => s.adequate_cutoffs(),
            BipartiteState::Density(rho) => rho.cutoffs(),
        }
    }
}

impl From<FockSuperposition> for BipartiteState {
    fn from(s: FockSuperposition) -> Self {
        BipartiteState::Fock(s)
    }
}

impl From<CoherentSuperposition> for BipartiteState {
    fn from(s: CoherentSuperposition) -> Self {
        BipartiteState::Coherent(s)
    }
}

impl From<TruncatedDensityMatrix> for BipartiteState {
    fn from(s: TruncatedDensityMatrix) -> Self {
        BipartiteState::Density(s)
    }
}

/// Projects the state onto `n_a ≤ cutoff_a, n_b ≤ cutoff_b` and renormalises.
pub fn to_density_matrix(
    state: &BipartiteState,
    cutoff_a: u32,
    cutoff_b: u32,
    threshold: f64,
) -> Result<TruncatedDensityMatrix> {
    let dim = product_dim(cutoff_a, cutoff_b);
    let check = |discarded: f64| {
        if discarded > threshold {
            Err(Error::TruncationTooSevere { discarded, threshold })
        } else {
            Ok(())
        }
    };
    match state {
        BipartiteState::Fock(psi) => {
            let kept: Vec<&FockTerm> = psi
                .terms()
                .iter()
                .filter(|t| t.n_a <= cutoff_a && t.n_b <= cutoff_b)
                .collect();
            let kept_norm = kept.iter().fold(BigRational::zero(), |acc, t| acc + t.amplitude.norm_sqr());
            let discarded = BigRational::one() - &kept_norm / psi.norm_sqr();
            check(rational_to_f64(&discarded))?;
            if kept_norm.is_zero() {
                return Err(Error::TruncationTooSevere { discarded: 1.0, threshold });
            }
            let mut exact = vec![GaussianRational::zero(); dim * dim];
            let inv = kept_norm.recip();
            for x in &kept {
                for y in &kept {
                    let r = basis_index(cutoff_b, x.n_a, x.n_b);
                    let c = basis_index(cutoff_b, y.n_a, y.n_b);
                    exact[r * dim + c] = (&x.amplitude * &y.amplitude.conj()).scale(&inv);
                }
            }
            let entries = DMatrix::from_fn(dim, dim, |r, c| exact[r * dim + c].to_complex64());
            Ok(TruncatedDensityMatrix {
                cutoff_a,
                cutoff_b,
                entries,
                exact: Some(exact),
                discarded_weight: rational_to_f64(&discarded),
            })
        }
        BipartiteState::Coherent(psi) => {
            let mut v = DVector::<Complex64>::zeros(dim);
            for n_a in 0..=cutoff_a {
                for n_b in 0..=cutoff_b {
                    v[basis_index(cutoff_b, n_a, n_b)] = psi.fock_amplitude(n_a, n_b);
                }
            }
            let kept = v.norm_squared();
            let discarded = (1.0 - kept).max(0.0);
            check(discarded)?;
            let entries = (&v * v.adjoint()).map(|z| z / kept);
            Ok(TruncatedDensityMatrix {
                cutoff_a,
                cutoff_b,
                entries,
                exact: None,
                discarded_weight: discarded,
            })
        }
        BipartiteState::Density(rho) => {
            let (ca, cb) = rho.cutoffs();
            let keep = |n_a: u32, n_b: u32| n_a <= cutoff_a && n_b <= cutoff_b;
            let mut kept_trace = 0.0;
            for n_a in 0..=ca {
                for n_b in 0..=cb {
                    if keep(n_a, n_b) {
                        kept_trace += rho.get((n_a, n_b), (n_a, n_b)).re;
                    }
                }
            }
            let discarded = (1.0 - kept_trace).max(0.0);
            check(discarded)?;
            if kept_trace <= 0.0 {
                return Err(Error::TruncationTooSevere { discarded: 1.0, threshold });
            }
            let pairs: Vec<(u32, u32)> = (0..=ca.min(cutoff_a))
                .flat_map(|a| (0..=cb.min(cutoff_b)).map(move |b| (a, b)))
                .collect();
            let exact = rho.exact_entries().map(|src| {
                let mut out = vec![GaussianRational::zero(); dim * dim];
                let mut trace = BigRational::zero();
                for &x in &pairs {
                    trace += &src[rho.index(x.0, x.1) * rho.dim() + rho.index(x.0, x.1)].re;
                }
                let inv = trace.recip();
                for &x in &pairs {
                    for &y in &pairs {
                        let v = &src[rho.index(x.0, x.1) * rho.dim() + rho.index(y.0, y.1)];
                        out[basis_index(cutoff_b, x.0, x.1) * dim + basis_index(cutoff_b, y.0, y.1)] =
                            v.scale(&inv);
                    }
                }
                out
            });
            let mut entries = DMatrix::<Complex64>::zeros(dim, dim);
            for &x in &pairs {
                for &y in &pairs {
                    entries[(basis_index(cutoff_b, x.0, x.1), basis_index(cutoff_b, y.0, y.1))] =
                        rho.get(x, y) / kept_trace;
                }
            }
            Ok(TruncatedDensityMatrix { cutoff_a, cutoff_b, entries, exact, discarded_weight: discarded })
        }
    }
}

/// One creation or annihilation factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ladder {
    pub mode: Mode,
    pub dagger: bool,
}

impl Ladder {
    pub const A: Ladder = Ladder { mode: Mode::A, dagger: false };
    pub const A_DAG: Ladder = Ladder { mode: Mode::A, dagger: true };
    pub const B: Ladder = Ladder { mode: Mode::B, dagger: false };
    pub const B_DAG: Ladder = Ladder { mode: Mode::B, dagger: true };
}

/// Single-mode ladder operator as a dense `(cutoff+1)²` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderMatrix {
    pub mode: Mode,
    pub dagger: bool,
    pub cutoff: u32,
    pub entries: DMatrix<f64>,
}

impl LadderMatrix {
    /// `⟨m|â|n⟩ = √n δ_{m,n−1}`.
    pub fn annihilator(mode: Mode, cutoff: u32) -> Self {
        let d = cutoff as usize + 1;
        let entries = DMatrix::from_fn(d, d, |m, n| if m + 1 == n { (n as f64).sqrt() } else { 0.0 });
        Self { mode, dagger: false, cutoff, entries }
    }

    pub fn creator(mode: Mode, cutoff: u32) -> Self {
        Self::annihilator(mode, cutoff).adjoint()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            mode: self.mode,
            dagger: !self.dagger,
            cutoff: self.cutoff,
            entries: self.entries.transpose(),
        }
    }

    /// `â†^dag â^ann` on this cutoff.
    pub fn normal_word(cutoff: u32, dag: u32, ann: u32) -> DMatrix<f64> {
        let a = Self::annihilator(Mode::A, cutoff).entries;
        let c = a.transpose();
        let d = cutoff as usize + 1;
        let mut w = DMatrix::<f64>::identity(d, d);
        for _ in 0..dag {
            w = &w * &c;
        }
        for _ in 0..ann {
            w = &w * &a;
        }
        w
    }
}

/// State vector on the truncated product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub cutoff_a: u32,
    pub cutoff_b: u32,
    pub amplitudes: DVector<Complex64>,
}

impl FockVector {
    pub fn zeros(cutoff_a: u32, cutoff_b: u32) -> Self {
        Self { cutoff_a, cutoff_b, amplitudes: DVector::zeros(product_dim(cutoff_a, cutoff_b)) }
    }

    pub fn basis(cutoff_a: u32, cutoff_b: u32, n_a: u32, n_b: u32) -> Self {
        let mut v = Self::zeros(cutoff_a, cutoff_b);
        v.amplitudes[basis_index(cutoff_b, n_a, n_b)] = Complex64::one();
        v
    }

    pub fn from_fock(psi: &FockSuperposition, cutoff_a: u32, cutoff_b: u32) -> Self {
        let mut v = Self::zeros(cutoff_a, cutoff_b);
        for (c, n_a, n_b) in psi.normalized_terms() {
            if n_a <= cutoff_a && n_b <= cutoff_b {
                v.amplitudes[basis_index(cutoff_b, n_a, n_b)] = c;
            }
        }
        v
    }

    pub fn from_coherent(psi: &CoherentSuperposition, cutoff_a: u32, cutoff_b: u32) -> Self {
        let mut v = Self::zeros(cutoff_a, cutoff_b);
        for n_a in 0..=cutoff_a {
            for n_b in 0..=cutoff_b {
                v.amplitudes[basis_index(cutoff_b, n_a, n_b)] = psi.fock_amplitude(n_a, n_b);
            }
        }
        v
    }

    pub fn get(&self, n_a: u32, n_b: u32) -> Complex64 {
        self.amplitudes[basis_index(self.cutoff_b, n_a, n_b)]
    }

    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Applied {
    pub vector: FockVector,
    /// Norm of the amplitude pushed above the cutoff, summed in quadrature over factors.
    pub leakage: f64,
}

/// Applies an operator word written left to right (rightmost factor acts first).
pub fn apply_operator(state: &FockVector, word: &[Ladder]) -> Applied {
    let (ca, cb) = (state.cutoff_a, state.cutoff_b);
    let mut current = state.clone();
    let mut leaked_sqr = 0.0;
    for factor in word.iter().rev() {
        let mut next = FockVector::zeros(ca, cb);
        for n_a in 0..=ca {
            for n_b in 0..=cb {
                let amp = current.get(n_a, n_b);
                if amp.is_zero() {
                    continue;
                }
                let (n, cutoff) = match factor.mode {
                    Mode::A => (n_a, ca),
                    Mode::B => (n_b, cb),
                };
                let (target, weight) = if factor.dagger {
                    (n + 1, ((n + 1) as f64).sqrt())
                } else if n == 0 {
                    continue;
                } else {
                    (n - 1, (n as f64).sqrt())
                };
                if target > cutoff {
                    leaked_sqr += (amp * weight).norm_sqr();
                    continue;
                }
                let (ta, tb) = match factor.mode {
                    Mode::A => (target, n_b),
                    Mode::B => (n_a, target),
                };
                next.amplitudes[basis_index(cb, ta, tb)] += amp * weight;
            }
        }
        current = next;
    }
    Applied { vector: current, leakage: leaked_sqr.sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn singlet_terms() {
        let s = make_singlet();
        let terms = s.normalized_terms();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(terms.len(), 2);
        assert!((terms[0].0.re - h).abs() < TOL && terms[0].1 == 0 && terms[0].2 == 1);
        assert!((terms[1].0.re + h).abs() < TOL && terms[1].1 == 1 && terms[1].2 == 0);
        assert!((s.norm() - 1.0).abs() < TOL);
        assert_eq!(s.overlap_basis(0, 0), Complex64::zero());
        assert_eq!(s.norm_sqr(), &BigRational::from_integer(2.into()));
    }

    #[test]
    fn fock_merges_duplicates_and_rejects_zero() {
        let s = FockSuperposition::new([
            (GaussianRational::one(), 1, 1),
            (GaussianRational::one(), 1, 1),
            (GaussianRational::zero(), 2, 0),
        ])
        .unwrap();
        assert_eq!(s.terms().len(), 1);
        let err = FockSuperposition::new([
            (GaussianRational::one(), 0, 0),
            (GaussianRational::from_integer(-1), 0, 0),
        ]);
        assert!(matches!(err, Err(Error::DegenerateState(_))));
    }

    #[test]
    fn coherent_bell_normalisation() {
        let one = Complex64::one();
        let s = make_coherent_bell(one, one).unwrap();
        // Oracle: ‖|α,β⟩ − |−α,−β⟩‖² = 2 − 2 Re⟨α|−α⟩⟨β|−β⟩ with the overlap formula.
        let cross = coherent_overlap(one, -one) * coherent_overlap(one, -one);
        let expected = 2.0 - 2.0 * cross.re;
        assert!((s.norm_sqr() - expected).abs() < TOL);
        assert!((s.norm_sqr() - (2.0 - 2.0 * (-4.0f64).exp())).abs() < TOL);
        assert!((s.norm() - 1.0).abs() < TOL);
        assert!(matches!(
            make_coherent_bell(Complex64::zero(), Complex64::zero()),
            Err(Error::DegenerateState(_))
        ));
        let s = make_coherent_bell(Complex64::new(0.3, -0.7), Complex64::new(0.0, 0.2)).unwrap();
        assert!((s.norm() - 1.0).abs() < TOL);
    }

    #[test]
    fn coherent_overlap_matches_truncated_vectors() {
        let alpha = Complex64::new(0.8, 0.6);
        let cutoff = adequate_cutoff(alpha);
        let plus = CoherentSuperposition::product(alpha, Complex64::zero());
        let minus = CoherentSuperposition::product(-alpha, Complex64::zero());
        let v = FockVector::from_coherent(&plus, cutoff, 0);
        let w = FockVector::from_coherent(&minus, cutoff, 0);
        let analytic = coherent_overlap(alpha, -alpha);
        assert!((v.inner(&w) - analytic).norm() < 1e-9);
    }

    #[test]
    fn singlet_density_matrix() {
        let rho = to_density_matrix(&make_singlet().into(), 1, 1, DEFAULT_DISCARD_THRESHOLD).unwrap();
        let exact = rho.exact_entries().unwrap();
        let half = GaussianRational::ratio(1, 2);
        // basis |00⟩,|01⟩,|10⟩,|11⟩
        let mut expected = vec![GaussianRational::zero(); 16];
        expected[4 + 1] = half.clone();
        expected[2 * 4 + 2] = half.clone();
        expected[4 + 2] = -&half;
        expected[2 * 4 + 1] = -&half;
        assert_eq!(exact, expected.as_slice());
        let rank = rho.entries().clone().symmetric_eigenvalues().iter().filter(|e| e.abs() > 1e-12).count();
        assert_eq!(rank, 1);
        assert_eq!(rho.discarded_weight(), 0.0);
    }

    #[test]
    fn singlet_at_vacuum_cutoff_is_too_severe() {
        let err = to_density_matrix(&make_singlet().into(), 0, 0, DEFAULT_DISCARD_THRESHOLD);
        assert!(matches!(err, Err(Error::TruncationTooSevere { .. })));
    }

    #[test]
    fn coherent_bell_truncation() {
        let one = Complex64::one();
        let state: BipartiteState = make_coherent_bell(one, one).unwrap().into();
        assert_eq!(adequate_cutoff(one), 19);
        let rho = to_density_matrix(&state, 19, 19, DEFAULT_DISCARD_THRESHOLD).unwrap();
        assert!(rho.discarded_weight() <= 1e-12);
        assert!((rho.entries().trace().re - 1.0).abs() < TOL);
        // At cutoff 12 the Poisson tail is ~1.4e-10.
        match to_density_matrix(&state, 12, 12, DEFAULT_DISCARD_THRESHOLD) {
            Err(Error::TruncationTooSevere { discarded, .. }) => {
                assert!(discarded > 1e-10 && discarded < 2e-10, "{discarded}")
            }
            other => panic!("expected TruncationTooSevere, got {other:?}"),
        }
    }

    #[test]
    fn ladder_adjointness_and_commutator() {
        for cutoff in 0..8 {
            let a = LadderMatrix::annihilator(Mode::A, cutoff);
            let c = LadderMatrix::creator(Mode::A, cutoff);
            assert_eq!(c.entries, a.entries.transpose());
            assert!(c.dagger && !a.dagger);
            let number = &c.entries * &a.entries;
            for m in 0..=cutoff as usize {
                for n in 0..=cutoff as usize {
                    let expected = if m == n { m as f64 } else { 0.0 };
                    assert!((number[(m, n)] - expected).abs() < 1e-12);
                }
            }
            let comm = &a.entries * &c.entries - &c.entries * &a.entries;
            for m in 0..cutoff as usize {
                for n in 0..cutoff as usize {
                    let expected = if m == n { 1.0 } else { 0.0 };
                    assert!((comm[(m, n)] - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn apply_operator_examples() {
        let out = apply_operator(&FockVector::basis(2, 2, 0, 1), &[Ladder::A_DAG, Ladder::B]);
        assert_eq!(out.vector, FockVector::basis(2, 2, 1, 0));
        let out = apply_operator(&FockVector::basis(2, 2, 0, 0), &[Ladder::A]);
        assert_eq!(out.vector, FockVector::zeros(2, 2));
        let out = apply_operator(
            &FockVector::basis(2, 2, 1, 1),
            &[Ladder::A_DAG, Ladder::A, Ladder::B_DAG, Ladder::B],
        );
        assert_eq!(out.vector, FockVector::basis(2, 2, 1, 1));
        assert_eq!(out.leakage, 0.0);
    }

    #[test]
    fn apply_operator_reports_leakage() {
        let out = apply_operator(&FockVector::basis(1, 1, 1, 0), &[Ladder::A_DAG]);
        assert_eq!(out.vector, FockVector::zeros(1, 1));
        assert!((out.leakage - 2f64.sqrt()).abs() < TOL);
    }

    #[test]
    fn density_from_entries_validates() {
        let bad = DMatrix::from_row_slice(1, 1, &[Complex64::new(-1.0, 0.0)]);
        assert!(TruncatedDensityMatrix::from_entries(0, 0, bad).is_err());
        let mixed = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(0.5, 0.0),
            Complex64::zero(),
            Complex64::zero(),
            Complex64::new(0.5, 0.0),
        ]));
        let rho = TruncatedDensityMatrix::from_entries(1, 1, mixed).unwrap();
        assert_eq!(rho.get((1, 1), (1, 1)), Complex64::new(0.5, 0.0));
        let non_psd = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.5, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]);
        assert!(TruncatedDensityMatrix::from_entries(0, 1, non_psd).is_err());
    }
}
