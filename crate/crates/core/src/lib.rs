//! Detection of non-positive partial transposition (NPT) in two-mode bosonic
//! states from matrices of creation/annihilation-operator moments.
//!
//! For a state `ρ`, the moment matrix of the partially transposed state
//! `M(ρ^Γ)` is positive semidefinite iff `ρ` is PPT. Checking only the leading
//! principal minors decides positive definiteness and misses states whose
//! leading blocks become singular; a negative *principal* minor on any index
//! subset is a conclusive witness of NPT.
//!
//! * [`fock`]: states, truncation, ladder matrices.
//! * [`moments`]: moments, the partial-transpose index swap, moment matrices.
//! * [`minors`], [`det`], [`signature`]: determinants, leading-minor scans,
//!   witness search and ordering search.
//! * [`oracle`]: explicit partial transposition for cross-checks.

pub mod det;
pub mod error;
pub mod exact;
pub mod fock;
pub mod minors;
pub mod moments;
pub mod oracle;
pub mod ordering;
pub mod signature;

pub use det::{det_exact, det_float, FloatDeterminant, SignClass};
pub use error::{Error, Result};
pub use exact::GaussianRational;
pub use fock::{
    apply_operator, make_bell_phi, make_coherent_bell, make_singlet, to_density_matrix, BipartiteState,
    CoherentSuperposition, FockSuperposition, FockVector, Ladder, LadderMatrix, Mode, TruncatedDensityMatrix,
};
pub use minors::{
    classify_state, leading_minor_scan, principal_minor, search_witness, Classification, Determinant,
    IndexSubset, MinorReport, SearchOptions, Strategy, Verdict, WitnessResult,
};
pub use moments::{
    build_moment_matrix, cross_validate_backends, moment, normal_order_contraction, swap_for_partial_transpose,
    Backend, Exactness, MomentEngine, MomentMatrix, MomentValue, Scalar,
};
pub use oracle::{agreement_audit, oracle_npt, partial_transpose, AuditOutcome, AuditRecord, OracleResult, OracleVerdict};
pub use ordering::{MultiIndex, OperatorOrdering};
pub use signature::{ordering_signature_search, SignatureMatch};
