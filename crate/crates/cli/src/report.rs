use std::fmt::Write as _;

use ppt_moments::det::{SignClass, CONDITION_WARNING};
use ppt_moments::minors::imaginary_residues;
use ppt_moments::oracle::AuditOutcome;
use ppt_moments::{
    AuditRecord, Backend, Determinant, Exactness, MinorReport, OracleResult, OracleVerdict, Strategy, Verdict,
    WitnessResult,
};
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "ppt-moments.report/v1";

/// Imaginary parts of float minors above this bound are reported.
const IMAGINARY_RESIDUE_BOUND: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportVerdict {
    #[serde(rename = "NPT-WITNESSED")]
    NptWitnessed,
    #[serde(rename = "PPT-CONSISTENT")]
    PptConsistent,
}

impl ReportVerdict {
    pub fn label(self) -> &'static str {
        match self {
            ReportVerdict::NptWitnessed => "NPT-WITNESSED",
            ReportVerdict::PptConsistent => "PPT-CONSISTENT",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            ReportVerdict::NptWitnessed => 2,
            ReportVerdict::PptConsistent => 0,
        }
    }
}

/// Everything needed to re-run the command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub order: String,
    pub n_max: usize,
    pub backend: Backend,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cardinality: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    #[serde(default)]
    pub with_oracle: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterminantRecord {
    pub exactness: Exactness,
    pub decimal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rational: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imaginary_residue: Option<f64>,
}

impl From<&Determinant> for DeterminantRecord {
    fn from(d: &Determinant) -> Self {
        match d {
            Determinant::Exact(q) => Self {
                exactness: Exactness::ExactRational,
                decimal: format!("{:e}", d.to_f64()),
                rational: Some(q.to_string()),
                condition: None,
                imaginary_residue: None,
            },
            Determinant::Float { det, imag_residue } => Self {
                exactness: Exactness::Float,
                decimal: format!("{:e}", det.value.re),
                rational: None,
                condition: Some(det.condition).filter(|c| c.is_finite()),
                imaginary_residue: Some(*imag_residue),
            },
        }
    }
}

impl DeterminantRecord {
    fn display(&self) -> &str {
        self.rational.as_deref().unwrap_or(&self.decimal)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorRecord {
    /// One-based positions in the ordering.
    pub subset: Vec<usize>,
    pub operators: Vec<String>,
    pub sign: String,
    pub determinant: DeterminantRecord,
}

impl From<&MinorReport> for MinorRecord {
    fn from(r: &MinorReport) -> Self {
        Self {
            subset: r.subset.indices().to_vec(),
            operators: r.operators.iter().map(ToString::to_string).collect(),
            sign: r.sign.symbol().to_string(),
            determinant: (&r.determinant).into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub verdict: Verdict,
    pub strategy: Strategy,
    pub max_cardinality: usize,
    pub examined: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minor: Option<MinorRecord>,
}

impl From<&WitnessResult> for WitnessRecord {
    fn from(w: &WitnessResult) -> Self {
        Self {
            verdict: w.verdict,
            strategy: w.strategy,
            max_cardinality: w.max_cardinality,
            examined: w.examined,
            minor: w.witness.as_ref().map(Into::into),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub cutoffs: [u32; 2],
    pub min_eigenvalue: f64,
    pub negativity: f64,
    pub verdict: OracleVerdict,
}

impl From<&OracleResult> for OracleRecord {
    fn from(o: &OracleResult) -> Self {
        Self {
            cutoffs: [o.spectrum.cutoffs.0, o.spectrum.cutoffs.1],
            min_eigenvalue: o.spectrum.min_eigenvalue,
            negativity: o.spectrum.negativity,
            verdict: o.verdict,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingRecord {
    pub name: String,
    /// The first `n_max` operator words.
    pub words: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub command: String,
    pub state_file: String,
    pub fingerprint: String,
    pub parameters: Parameters,
    pub ordering: OrderingRecord,
    pub leading_minors: Vec<MinorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix_sets_examined: Option<usize>,
    pub verdict: ReportVerdict,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(
        command: &str,
        state_file: &str,
        fingerprint: String,
        parameters: Parameters,
        ordering: OrderingRecord,
        scan: &[MinorReport],
    ) -> Self {
        let mut warnings = Vec::new();
        let flagged: Vec<String> = scan
            .iter()
            .filter(|r| matches!(&r.determinant, Determinant::Float { det, .. } if det.ill_conditioned()))
            .map(|r| r.subset.len().to_string())
            .collect();
        if !flagged.is_empty() {
            warnings.push(format!(
                "float minors with condition above {CONDITION_WARNING:e} (signs rest on the zero band): N = {}",
                flagged.join(", ")
            ));
        }
        for r in imaginary_residues(scan, IMAGINARY_RESIDUE_BOUND) {
            warnings.push(format!("det M_{} has a non-negligible imaginary part", r.subset.len()));
        }
        let verdict = if scan.iter().any(|r| r.sign == SignClass::Negative) {
            ReportVerdict::NptWitnessed
        } else {
            ReportVerdict::PptConsistent
        };
        Self {
            schema: SCHEMA.into(),
            command: command.into(),
            state_file: state_file.into(),
            fingerprint,
            parameters,
            ordering,
            leading_minors: scan.iter().map(Into::into).collect(),
            witness: None,
            oracle: None,
            audit: None,
            prefix_sets_examined: None,
            verdict,
            warnings,
        }
    }

    /// A witness decides the verdict on its own.
    pub fn with_witness(mut self, w: &WitnessResult) -> Self {
        self.verdict = match w.verdict {
            Verdict::NptWitnessed => ReportVerdict::NptWitnessed,
            Verdict::NoWitnessFound => ReportVerdict::PptConsistent,
        };
        self.witness = Some(w.into());
        self
    }

    pub fn with_oracle(mut self, o: &OracleResult, audit: &AuditRecord) -> Self {
        self.oracle = Some(o.into());
        self.audit = Some(audit.outcome);
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let p = &self.parameters;
        let _ = writeln!(out, "state     {} (fingerprint {})", self.state_file, self.fingerprint);
        let _ = writeln!(out, "ordering  {}, N = {}, backend {}, tol {:e}", self.ordering.name, p.n_max, p.backend, p.tol);
        if !self.leading_minors.is_empty() {
            let _ = writeln!(out, "\n{:>3}  {:<4}  {:<24}  {:<14}  operator", "N", "sign", "det M_N", "exactness");
            for (r, word) in self.leading_minors.iter().zip(&self.ordering.words) {
                let _ = writeln!(
                    out,
                    "{:>3}  {:<4}  {:<24}  {:<14}  {}",
                    r.subset.len(),
                    r.sign,
                    r.determinant.display(),
                    r.determinant.exactness.to_string(),
                    word
                );
            }
        }
        if let Some(n) = self.prefix_sets_examined {
            let _ = writeln!(out, "\nmatched ordering after {n} prefix sets:");
            let _ = writeln!(out, "  {}", self.ordering.words.join(", "));
        }
        if let Some(w) = &self.witness {
            let _ = writeln!(
                out,
                "\nwitness search: {}, cardinality <= {}, {} minors examined",
                strategy_name(w.strategy),
                w.max_cardinality,
                w.examined
            );
            match &w.minor {
                Some(m) => {
                    let subset: Vec<String> = m.subset.iter().map(ToString::to_string).collect();
                    let _ = writeln!(
                        out,
                        "witness   {{{}}}: {}  det = {} ({})",
                        subset.join(", "),
                        m.operators.join(", "),
                        m.determinant.display(),
                        m.determinant.exactness
                    );
                }
                None => {
                    let _ = writeln!(out, "witness   none");
                }
            }
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(
                out,
                "oracle    {} at cutoffs ({}, {}): min eigenvalue {:.6e}, negativity {:.6e}",
                o.verdict, o.cutoffs[0], o.cutoffs[1], o.min_eigenvalue, o.negativity
            );
        }
        if let Some(a) = &self.audit {
            let _ = writeln!(out, "audit     {}", audit_name(*a));
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning   {w}");
        }
        let scope = if self.witness.is_some() { "" } else { " (leading minors only)" };
        let _ = writeln!(out, "\nverdict: {}{scope}", self.verdict.label());
        out
    }
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::Exhaustive => "exhaustive",
        Strategy::EigenvectorGuided => "eigenvector-guided",
    }
}

fn audit_name(a: AuditOutcome) -> &'static str {
    match a {
        AuditOutcome::Consistent => "consistent",
        AuditOutcome::ExpectedIncompleteness => "expected incompleteness (oracle NPT, no minor witness)",
        AuditOutcome::SoundnessViolation => "SOUNDNESS VIOLATION",
    }
}
