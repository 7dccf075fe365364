//! Moments `M_ij(ρ) = Tr[(f_i)† f_j ρ]` and moment matrices.
//!
//! Two independent evaluation paths exist:
//!
//! * the analytic path normal-orders `f_i† f_j` with
//!   [`normal_order_contraction`] and evaluates `⟨â†^p â^q b̂†^r b̂^s⟩` in closed
//!   form (Fock matrix elements, or coherent-state eigenvalues);
//! * the truncated-trace path multiplies explicit ladder matrices and traces
//!   against a [`TruncatedDensityMatrix`].
//!
//! Finite-support states can be evaluated exactly over the Gaussian
//! rationals; coherent superpositions are float-only.

use std::collections::HashMap;
use std::fmt;

use dashmap::DashMap;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{GaussianRational, Surd, SurdSum};
use crate::fock::{
    coherent_overlap, to_density_matrix, BipartiteState, LadderMatrix, TruncatedDensityMatrix,
    DEFAULT_DISCARD_THRESHOLD,
};
use crate::ordering::{MultiIndex, OperatorOrdering};

/// Arithmetic used to evaluate moments and determinants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
    /// Exact per entry, falling back to floats where the value is not exact.
    Auto,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
            Backend::Auto => "auto",
        })
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "float" => Ok(Backend::Float),
            "auto" => Ok(Backend::Auto),
            other => Err(Error::InvalidArgument(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    ExactRational,
    Float,
}

impl fmt::Display for Exactness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exactness::ExactRational => "exact-rational",
            Exactness::Float => "float",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(GaussianRational),
    Float(Complex64),
}

impl Scalar {
    pub fn to_complex64(&self) -> Complex64 {
        match self {
            Scalar::Exact(q) => q.to_complex64(),
            Scalar::Float(z) => *z,
        }
    }

    pub fn conj(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.conj()),
            Scalar::Float(z) => Scalar::Float(z.conj()),
        }
    }

    pub fn exactness(&self) -> Exactness {
        match self {
            Scalar::Exact(_) => Exactness::ExactRational,
            Scalar::Float(_) => Exactness::Float,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentValue {
    pub value: Scalar,
    /// Set when exact evaluation left an irrational surd and the value fell back to floats.
    pub surd_residue: bool,
}

impl MomentValue {
    pub fn exact(q: GaussianRational) -> Self {
        Self { value: Scalar::Exact(q), surd_residue: false }
    }

    pub fn float(z: Complex64) -> Self {
        Self { value: Scalar::Float(z), surd_residue: false }
    }

    pub fn exactness(&self) -> Exactness {
        self.value.exactness()
    }

    pub fn to_complex64(&self) -> Complex64 {
        self.value.to_complex64()
    }

    pub fn as_exact(&self) -> Option<&GaussianRational> {
        match &self.value {
            Scalar::Exact(q) => Some(q),
            Scalar::Float(_) => None,
        }
    }

    pub fn conj(&self) -> Self {
        Self { value: self.value.conj(), surd_residue: self.surd_residue }
    }

    /// Real part when the value is real (exactly, or within `tol` for floats).
    pub fn real_part(&self, tol: f64) -> Option<f64> {
        match &self.value {
            Scalar::Exact(q) if q.is_real() => Some(q.to_complex64().re),
            Scalar::Exact(_) => None,
            Scalar::Float(z) if z.im.abs() <= tol => Some(z.re),
            Scalar::Float(_) => None,
        }
    }
}

/// `â^m â†^n = Σ_k k!·C(m,k)·C(n,k)·â†^{n−k} â^{m−k}`, as `(k, coefficient)` pairs.
pub fn normal_order_contraction(m: u32, n: u32) -> Vec<(u32, u128)> {
    let binom = |n: u32, k: u32| -> u128 {
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
    };
    (0..=m.min(n))
        .map(|k| {
            let fact: u128 = (1..=k as u128).product();
            (k, fact * binom(m, k) * binom(n, k))
        })
        .collect()
}

/// Index pair whose moment on `ρ` equals the `(i, j)` moment on `ρ^Γ`
/// (transposition of the second mode).
pub fn swap_for_partial_transpose(i: MultiIndex, j: MultiIndex) -> (MultiIndex, MultiIndex) {
    (
        MultiIndex::new(i.a_dag, i.a, j.b_dag, j.b),
        MultiIndex::new(j.a_dag, j.a, i.b_dag, i.b),
    )
}

/// One normal-ordered monomial `coefficient · â†^p â^q b̂†^r b̂^s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct NormalTerm {
    coefficient: u128,
    p: u32,
    q: u32,
    r: u32,
    s: u32,
}

/// Normal-ordered expansion of `f_i† f_j`.
fn normal_ordered_product(i: MultiIndex, j: MultiIndex) -> Vec<NormalTerm> {
    // f_i† f_j = â†^{i2} (â^{i1} â†^{j1}) â^{j2} · b̂†^{i4} (b̂^{i3} b̂†^{j3}) b̂^{j4}
    let mut out = Vec::new();
    for (k, ck) in normal_order_contraction(i.a_dag, j.a_dag) {
        for (l, cl) in normal_order_contraction(i.b_dag, j.b_dag) {
            out.push(NormalTerm {
                coefficient: ck * cl,
                p: i.a + j.a_dag - k,
                q: i.a_dag + j.a - k,
                r: i.b + j.b_dag - l,
                s: i.b_dag + j.b - l,
            });
        }
    }
    out
}

/// Pushes the integers whose product is `⟨m|â†^p â^q|n⟩²`; false when the element vanishes.
fn single_mode_factors(bra: u32, p: u32, ket: u32, q: u32, out: &mut Vec<u64>) -> bool {
    if ket < q || bra < p || bra - p != ket - q {
        return false;
    }
    out.extend((ket - q + 1..=ket).map(u64::from));
    out.extend((bra - p + 1..=bra).map(u64::from));
    true
}

/// `ρ = Σ weight · |ket⟩⟨bra|` over finitely many Fock states.
#[derive(Clone, Debug)]
struct SupportEntry {
    ket: (u32, u32),
    bra: (u32, u32),
    exact: Option<GaussianRational>,
    float: Complex64,
}

#[derive(Clone, Debug)]
struct FiniteSupport {
    entries: Vec<SupportEntry>,
    exact: bool,
}

impl FiniteSupport {
    fn of(state: &BipartiteState) -> Option<Self> {
        match state {
            BipartiteState::Fock(psi) => {
                let inv = psi.norm_sqr().recip();
                let mut entries = Vec::new();
                for x in psi.terms() {
                    for y in psi.terms() {
                        let w = (&x.amplitude * &y.amplitude.conj()).scale(&inv);
                        entries.push(SupportEntry {
                            ket: (x.n_a, x.n_b),
                            bra: (y.n_a, y.n_b),
                            float: w.to_complex64(),
                            exact: Some(w),
                        });
                    }
                }
                Some(Self { entries, exact: true })
            }
            BipartiteState::Density(rho) => {
                let (ca, cb) = rho.cutoffs();
                let dim = rho.dim();
                let exact = rho.exact_entries();
                let mut entries = Vec::new();
                for xa in 0..=ca {
                    for xb in 0..=cb {
                        for ya in 0..=ca {
                            for yb in 0..=cb {
                                let (r, c) = (rho.index(xa, xb), rho.index(ya, yb));
                                let float = rho.entries()[(r, c)];
                                let ex = exact.map(|e| e[r * dim + c].clone());
                                let zero = match &ex {
                                    Some(q) => q.is_zero(),
                                    None => float.is_zero(),
                                };
                                if !zero {
                                    entries.push(SupportEntry { ket: (xa, xb), bra: (ya, yb), exact: ex, float });
                                }
                            }
                        }
                    }
                }
                Some(Self { entries, exact: exact.is_some() })
            }
            BipartiteState::Coherent(_) => None,
        }
    }

    fn expectation_exact(&self, terms: &[NormalTerm]) -> Result<GaussianRational> {
        let mut acc = SurdSum::new();
        let mut factors = Vec::new();
        for e in &self.entries {
            let w = e.exact.as_ref().expect("exact support");
            for t in terms {
                factors.clear();
                if !single_mode_factors(e.bra.0, t.p, e.ket.0, t.q, &mut factors)
                    || !single_mode_factors(e.bra.1, t.r, e.ket.1, t.s, &mut factors)
                {
                    continue;
                }
                let coefficient = w.scale(&BigRational::from_integer(t.coefficient.into()));
                acc.add_term(&coefficient, &Surd::sqrt_of_product(&factors));
            }
        }
        acc.to_rational().map_err(|radicands| Error::IrrationalValue { radicands })
    }

    fn expectation_float(&self, terms: &[NormalTerm]) -> Complex64 {
        let mut acc = Complex64::zero();
        let mut factors = Vec::new();
        for e in &self.entries {
            for t in terms {
                factors.clear();
                if !single_mode_factors(e.bra.0, t.p, e.ket.0, t.q, &mut factors)
                    || !single_mode_factors(e.bra.1, t.r, e.ket.1, t.s, &mut factors)
                {
                    continue;
                }
                let element: f64 = factors.iter().map(|&f| (f as f64).sqrt()).product();
                acc += e.float * (t.coefficient as f64 * element);
            }
        }
        acc
    }
}

fn coherent_expectation(state: &crate::fock::CoherentSuperposition, terms: &[NormalTerm]) -> Complex64 {
    let branches = state.normalized_terms();
    let mut acc = Complex64::zero();
    for k in &branches {
        for l in &branches {
            let weight = k.amplitude.conj()
                * l.amplitude
                * coherent_overlap(k.alpha, l.alpha)
                * coherent_overlap(k.beta, l.beta);
            for t in terms {
                acc += weight
                    * t.coefficient as f64
                    * k.alpha.conj().powu(t.p)
                    * l.alpha.powu(t.q)
                    * k.beta.conj().powu(t.r)
                    * l.beta.powu(t.s);
            }
        }
    }
    acc
}

/// Evaluates moments of one state, memoising by index pair.
///
/// The cache is keyed on the pair after partial-transpose resolution, so the
/// plain and transposed matrices of the same state share entries.
pub struct MomentEngine<'s> {
    state: &'s BipartiteState,
    backend: Backend,
    fingerprint: String,
    support: Option<FiniteSupport>,
    cache: DashMap<(MultiIndex, MultiIndex), MomentValue>,
}

impl<'s> MomentEngine<'s> {
    pub fn new(state: &'s BipartiteState, backend: Backend) -> Self {
        Self {
            state,
            backend,
            fingerprint: state.fingerprint(),
            support: FiniteSupport::of(state),
            cache: DashMap::new(),
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn cached_len(&self) -> usize {
        self.cache.len()
    }

    fn exact_moment(&self, terms: &[NormalTerm]) -> Result<GaussianRational> {
        match &self.support {
            Some(s) if s.exact => s.expectation_exact(terms),
            Some(_) => Err(Error::InexactInput("density matrix has float entries".into())),
            None => Err(Error::InexactInput("coherent amplitudes are transcendental".into())),
        }
    }

    fn float_moment(&self, terms: &[NormalTerm]) -> Complex64 {
        match (&self.support, self.state) {
            (Some(s), _) => s.expectation_float(terms),
            (None, BipartiteState::Coherent(c)) => coherent_expectation(c, terms),
            (None, _) => unreachable!("finite-support states always have a support"),
        }
    }

    /// `Tr[f_i† f_j ρ]` by the analytic path.
    pub fn moment(&self, i: MultiIndex, j: MultiIndex) -> Result<MomentValue> {
        if let Some(v) = self.cache.get(&(i, j)) {
            return Ok(v.clone());
        }
        let terms = normal_ordered_product(i, j);
        let value = match self.backend {
            Backend::Exact => MomentValue::exact(self.exact_moment(&terms)?),
            Backend::Float => MomentValue::float(self.float_moment(&terms)),
            Backend::Auto => match self.exact_moment(&terms) {
                Ok(q) => MomentValue::exact(q),
                Err(e) if e.is_exactness_failure() => MomentValue {
                    value: Scalar::Float(self.float_moment(&terms)),
                    surd_residue: matches!(e, Error::IrrationalValue { .. }),
                },
                Err(e) => return Err(e),
            },
        };
        self.cache.insert((i, j), value.clone());
        Ok(value)
    }

    /// Moment of `ρ^Γ` when `transposed`, of `ρ` otherwise.
    pub fn matrix_entry(&self, i: MultiIndex, j: MultiIndex, transposed: bool) -> Result<MomentValue> {
        let (i, j) = if transposed { swap_for_partial_transpose(i, j) } else { (i, j) };
        self.moment(i, j)
    }

    /// Builds the leading `n × n` moment matrix. Only the upper triangle is
    /// evaluated; the lower one is filled by conjugation.
    pub fn matrix(&self, ordering: &OperatorOrdering, n: usize, transposed: bool) -> Result<MomentMatrix> {
        if n > ordering.len() {
            return Err(Error::InvalidArgument(format!(
                "N = {n} exceeds the ordering length {}",
                ordering.len()
            )));
        }
        let seq = ordering.sequence();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|p| (p..n).map(move |q| (p, q))).collect();
        let upper: Vec<MomentValue> = pairs
            .par_iter()
            .map(|&(p, q)| {
                self.matrix_entry(seq[p], seq[q], transposed).map_err(|e| Error::Entry {
                    row: p + 1,
                    col: q + 1,
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()?;
        let mut entries = vec![MomentValue::exact(GaussianRational::zero()); n * n];
        for (&(p, q), v) in pairs.iter().zip(upper) {
            if p != q {
                entries[q * n + p] = v.conj();
            }
            entries[p * n + q] = v;
        }
        Ok(MomentMatrix {
            ordering: ordering.truncated(n),
            transposed,
            backend: self.backend,
            fingerprint: self.fingerprint.clone(),
            entries,
        })
    }
}

/// `Tr[f_i† f_j ρ]` for a single pair.
pub fn moment(state: &BipartiteState, i: MultiIndex, j: MultiIndex, backend: Backend) -> Result<MomentValue> {
    MomentEngine::new(state, backend).moment(i, j)
}

pub fn build_moment_matrix(
    state: &BipartiteState,
    ordering: &OperatorOrdering,
    n: usize,
    transposed: bool,
    backend: Backend,
) -> Result<MomentMatrix> {
    MomentEngine::new(state, backend).matrix(ordering, n, transposed)
}

/// Hermitian matrix of moments, tagged with how it was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    ordering: OperatorOrdering,
    transposed: bool,
    backend: Backend,
    fingerprint: String,
    entries: Vec<MomentValue>,
}

impl MomentMatrix {
    /// Wraps explicit values (row-major). Used for matrices not built from a state.
    pub fn from_values(
        ordering: OperatorOrdering,
        transposed: bool,
        backend: Backend,
        fingerprint: impl Into<String>,
        entries: Vec<MomentValue>,
    ) -> Result<Self> {
        let n = ordering.len();
        if entries.len() != n * n {
            return Err(Error::InvalidArgument(format!("expected {} entries, got {}", n * n, entries.len())));
        }
        Ok(Self { ordering, transposed, backend, fingerprint: fingerprint.into(), entries })
    }

    pub fn size(&self) -> usize {
        self.ordering.len()
    }

    pub fn ordering(&self) -> &OperatorOrdering {
        &self.ordering
    }

    pub fn transposed(&self) -> bool {
        self.transposed
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Zero-based entry.
    pub fn entry(&self, p: usize, q: usize) -> &MomentValue {
        &self.entries[p * self.size() + q]
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(|v| v.as_exact().is_some())
    }

    pub fn to_float(&self) -> DMatrix<Complex64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |p, q| self.entry(p, q).to_complex64())
    }

    /// Row-major exact submatrix on zero-based indices, if every entry is exact.
    pub fn exact_submatrix(&self, idx: &[usize]) -> Option<Vec<GaussianRational>> {
        let mut out = Vec::with_capacity(idx.len() * idx.len());
        for &p in idx {
            for &q in idx {
                out.push(self.entry(p, q).as_exact()?.clone());
            }
        }
        Some(out)
    }

    pub fn float_submatrix(&self, idx: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.entry(idx[r], idx[c]).to_complex64())
    }

    /// Exact entries compare exactly, float entries within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.size();
        (0..n).all(|p| {
            (p..n).all(|q| match (self.entry(p, q).as_exact(), self.entry(q, p).as_exact()) {
                (Some(x), Some(y)) => *x == y.conj(),
                _ => (self.entry(p, q).to_complex64() - self.entry(q, p).to_complex64().conj()).norm() <= tol,
            })
        })
    }

    /// Smallest eigenvalue of the float view.
    pub fn min_eigenvalue(&self) -> f64 {
        self.to_float().symmetric_eigenvalues().min()
    }
}

/// Moment matrix by explicit ladder-matrix products traced against `ρ`.
///
/// The operator space is padded by the largest word degree so that no
/// product of truncated ladder matrices touches the cutoff.
pub fn traced_moment_matrix(
    rho: &TruncatedDensityMatrix,
    ordering: &OperatorOrdering,
    n: usize,
    transposed: bool,
) -> Result<DMatrix<Complex64>> {
    if n > ordering.len() {
        return Err(Error::InvalidArgument(format!("N = {n} exceeds the ordering length {}", ordering.len())));
    }
    let seq = &ordering.sequence()[..n];
    let degree = seq.iter().map(MultiIndex::degree).max().unwrap_or(0);
    let (ca, cb) = rho.cutoffs();
    let (wa, wb) = (ca + degree, cb + degree);
    let mut words_a: HashMap<(u32, u32), DMatrix<f64>> = HashMap::new();
    let mut words_b: HashMap<(u32, u32), DMatrix<f64>> = HashMap::new();
    let word = |cache: &mut HashMap<(u32, u32), DMatrix<f64>>, cutoff: u32, dag: u32, ann: u32| {
        cache
            .entry((dag, ann))
            .or_insert_with(|| LadderMatrix::normal_word(cutoff, dag, ann))
            .clone()
    };
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for p in 0..n {
        for q in p..n {
            let (i, j) = if transposed { swap_for_partial_transpose(seq[p], seq[q]) } else { (seq[p], seq[q]) };
            let x = word(&mut words_a, wa, i.a_dag, i.a).transpose() * word(&mut words_a, wa, j.a_dag, j.a);
            let y = word(&mut words_b, wb, i.b_dag, i.b).transpose() * word(&mut words_b, wb, j.b_dag, j.b);
            let mut acc = Complex64::zero();
            for ma in 0..=ca {
                for na in 0..=ca {
                    let xv = x[(ma as usize, na as usize)];
                    if xv == 0.0 {
                        continue;
                    }
                    for mb in 0..=cb {
                        for nb in 0..=cb {
                            let yv = y[(mb as usize, nb as usize)];
                            if yv != 0.0 {
                                acc += rho.get((na, nb), (ma, mb)) * (xv * yv);
                            }
                        }
                    }
                }
            }
            out[(p, q)] = acc;
            out[(q, p)] = acc.conj();
        }
    }
    Ok(out)
}

/// `max |analytic − traced|` over the leading `n × n` block.
///
/// `cutoffs` defaults to the state's natural cutoffs (largest occupation, or
/// the adequacy rule for coherent states).
pub fn cross_validate_backends(
    state: &BipartiteState,
    ordering: &OperatorOrdering,
    n: usize,
    transposed: bool,
    cutoffs: Option<(u32, u32)>,
) -> Result<f64> {
    let (ca, cb) = cutoffs.unwrap_or_else(|| state.natural_cutoffs());
    let rho = to_density_matrix(state, ca, cb, DEFAULT_DISCARD_THRESHOLD)?;
    let traced = traced_moment_matrix(&rho, ordering, n, transposed)?;
    let analytic = build_moment_matrix(state, ordering, n, transposed, Backend::Float)?.to_float();
    Ok((analytic - traced).iter().map(|z| z.norm()).fold(0.0, f64::max))
}
