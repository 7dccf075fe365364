//! Ground truth by explicit partial transposition and diagonalisation.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{basis_index, product_dim, to_density_matrix, BipartiteState, TruncatedDensityMatrix, DEFAULT_DISCARD_THRESHOLD};
use crate::minors::{Verdict, WitnessResult};

/// Residual bound on the reported extremal eigenpair.
pub const EIGEN_RESIDUAL_BOUND: f64 = 1e-8;

/// Row-major product-basis matrix with the second mode transposed:
/// `⟨m_a m_b|X^Γ|n_a n_b⟩ = ⟨m_a n_b|X|n_a m_b⟩`.
pub fn partial_transpose_second<T: Clone>(entries: &[T], cutoff_a: u32, cutoff_b: u32) -> Vec<T> {
    permute(entries, cutoff_a, cutoff_b, |(ma, mb), (na, nb)| ((ma, nb), (na, mb)))
}

/// Same with the first mode transposed.
pub fn partial_transpose_first<T: Clone>(entries: &[T], cutoff_a: u32, cutoff_b: u32) -> Vec<T> {
    permute(entries, cutoff_a, cutoff_b, |(ma, mb), (na, nb)| ((na, mb), (ma, nb)))
}

type Ket = (u32, u32);

fn permute<T: Clone>(entries: &[T], cutoff_a: u32, cutoff_b: u32, src: impl Fn(Ket, Ket) -> (Ket, Ket)) -> Vec<T> {
    let dim = product_dim(cutoff_a, cutoff_b);
    assert_eq!(entries.len(), dim * dim);
    let mut out = entries.to_vec();
    for ma in 0..=cutoff_a {
        for mb in 0..=cutoff_b {
            for na in 0..=cutoff_a {
                for nb in 0..=cutoff_b {
                    let (r, c) = src((ma, mb), (na, nb));
                    out[basis_index(cutoff_b, ma, mb) * dim + basis_index(cutoff_b, na, nb)] =
                        entries[basis_index(cutoff_b, r.0, r.1) * dim + basis_index(cutoff_b, c.0, c.1)].clone();
                }
            }
        }
    }
    out
}

fn row_major(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    m.transpose().as_slice().to_vec()
}

fn from_row_major(dim: usize, v: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(dim, dim, v)
}

/// `ρ^Γ` (second mode transposed) as a dense Hermitian matrix.
pub fn partial_transpose(rho: &TruncatedDensityMatrix) -> DMatrix<Complex64> {
    let (ca, cb) = rho.cutoffs();
    from_row_major(rho.dim(), &partial_transpose_second(&row_major(rho.entries()), ca, cb))
}

/// `ρ^{T_A}`; its spectrum coincides with that of `ρ^Γ`.
pub fn partial_transpose_first_mode(rho: &TruncatedDensityMatrix) -> DMatrix<Complex64> {
    let (ca, cb) = rho.cutoffs();
    from_row_major(rho.dim(), &partial_transpose_first(&row_major(rho.entries()), ca, cb))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialTransposeResult {
    pub min_eigenvalue: f64,
    /// Sum of `|λ|` over negative eigenvalues.
    pub negativity: f64,
    pub eigenvalue_sum: f64,
    pub cutoffs: (u32, u32),
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleVerdict {
    #[serde(rename = "NPT")]
    Npt,
    #[serde(rename = "PPT-AT-TRUNCATION")]
    PptAtTruncation,
}

impl fmt::Display for OracleVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleVerdict::Npt => "NPT",
            OracleVerdict::PptAtTruncation => "PPT-AT-TRUNCATION",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub spectrum: PartialTransposeResult,
    pub verdict: OracleVerdict,
}

/// Spectrum of `ρ^Γ` with a residual check on the smallest eigenpair.
pub fn partial_transpose_spectrum(rho: &TruncatedDensityMatrix) -> Result<PartialTransposeResult> {
    let pt = partial_transpose(rho);
    let eig = SymmetricEigen::new(pt.clone());
    let (k, min) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, v)| if v < best.1 { (k, v) } else { best });
    let v = eig.eigenvectors.column(k).into_owned();
    let residual = (&pt * &v - v.map(|z| z * min)).norm();
    if residual > EIGEN_RESIDUAL_BOUND {
        return Err(Error::EigenResidual { residual, bound: EIGEN_RESIDUAL_BOUND });
    }
    Ok(PartialTransposeResult {
        min_eigenvalue: min,
        negativity: eig.eigenvalues.iter().filter(|&&x| x < 0.0).map(|x| -x).sum(),
        eigenvalue_sum: eig.eigenvalues.sum(),
        cutoffs: rho.cutoffs(),
        residual,
    })
}

/// NPT iff the smallest eigenvalue of `ρ^Γ` is below `−tol`. Exact for
/// finite-support states inside the cutoffs.
pub fn oracle_npt(state: &BipartiteState, cutoff_a: u32, cutoff_b: u32, tol: f64) -> Result<OracleResult> {
    let rho = to_density_matrix(state, cutoff_a, cutoff_b, DEFAULT_DISCARD_THRESHOLD)?;
    let spectrum = partial_transpose_spectrum(&rho)?;
    let verdict = if spectrum.min_eigenvalue < -tol { OracleVerdict::Npt } else { OracleVerdict::PptAtTruncation };
    Ok(OracleResult { spectrum, verdict })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditOutcome {
    Consistent,
    /// The oracle sees NPT but no minor within the configured truncation does.
    ExpectedIncompleteness,
    /// A negative minor contradicts a PPT oracle. Never legitimate.
    SoundnessViolation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub moment: Verdict,
    pub oracle: OracleVerdict,
    pub outcome: AuditOutcome,
}

impl AuditRecord {
    pub fn is_hard_failure(&self) -> bool {
        self.outcome == AuditOutcome::SoundnessViolation
    }
}

pub fn agreement_audit(moment: &WitnessResult, oracle: &OracleResult) -> AuditRecord {
    audit_verdicts(moment.verdict, oracle.verdict)
}

pub fn audit_verdicts(moment: Verdict, oracle: OracleVerdict) -> AuditRecord {
    let outcome = match (moment, oracle) {
        (Verdict::NptWitnessed, OracleVerdict::Npt) | (Verdict::NoWitnessFound, OracleVerdict::PptAtTruncation) => {
            AuditOutcome::Consistent
        }
        (Verdict::NoWitnessFound, OracleVerdict::Npt) => AuditOutcome::ExpectedIncompleteness,
        (Verdict::NptWitnessed, OracleVerdict::PptAtTruncation) => AuditOutcome::SoundnessViolation,
    };
    AuditRecord { moment, oracle, outcome }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_singlet, FockSuperposition};

    #[test]
    fn singlet_spectrum() {
        let rho = to_density_matrix(&make_singlet().into(), 1, 1, DEFAULT_DISCARD_THRESHOLD).unwrap();
        let mut eig: Vec<f64> = partial_transpose(&rho).symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (got, want) in eig.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-12);
        }
        let r = oracle_npt(&make_singlet().into(), 1, 1, 1e-10).unwrap();
        assert_eq!(r.verdict, OracleVerdict::Npt);
        assert!((r.spectrum.min_eigenvalue + 0.5).abs() < 1e-12);
        assert!((r.spectrum.negativity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn product_state_is_invariant() {
        let s: BipartiteState = FockSuperposition::basis(0, 1).into();
        let rho = to_density_matrix(&s, 1, 1, DEFAULT_DISCARD_THRESHOLD).unwrap();
        assert_eq!(&partial_transpose(&rho), rho.entries());
        let r = oracle_npt(&FockSuperposition::basis(0, 0).into(), 1, 1, 1e-10).unwrap();
        assert_eq!(r.verdict, OracleVerdict::PptAtTruncation);
        assert!(r.spectrum.min_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn involution_is_exact() {
        let rho = to_density_matrix(&make_singlet().into(), 2, 1, DEFAULT_DISCARD_THRESHOLD).unwrap();
        let exact = rho.exact_entries().unwrap();
        assert_eq!(partial_transpose_second(&partial_transpose_second(exact, 2, 1), 2, 1), exact);
        let twice = partial_transpose_second(&partial_transpose_second(&row_major(rho.entries()), 2, 1), 2, 1);
        assert_eq!(twice, row_major(rho.entries()));
    }

    #[test]
    fn audit_table() {
        assert_eq!(audit_verdicts(Verdict::NptWitnessed, OracleVerdict::Npt).outcome, AuditOutcome::Consistent);
        assert_eq!(
            audit_verdicts(Verdict::NoWitnessFound, OracleVerdict::PptAtTruncation).outcome,
            AuditOutcome::Consistent
        );
        assert_eq!(
            audit_verdicts(Verdict::NoWitnessFound, OracleVerdict::Npt).outcome,
            AuditOutcome::ExpectedIncompleteness
        );
        assert!(audit_verdicts(Verdict::NptWitnessed, OracleVerdict::PptAtTruncation).is_hard_failure());
    }
}
