use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("truncation too severe: discarded weight {discarded:.3e} exceeds threshold {threshold:.3e}")]
    TruncationTooSevere { discarded: f64, threshold: f64 },

    /// A surd `√d` with non-square `d` survived summation; only the float
    /// backend can represent the value.
    #[error("moment is irrational (surviving radicands {radicands:?})")]
    IrrationalValue { radicands: Vec<u64> },

    /// The state carries float-only data (coherent amplitudes, float density entries).
    #[error("state has no exact representation: {0}")]
    InexactInput(String),

    #[error("moment matrix entry ({row}, {col}) failed: {source}")]
    Entry {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("index subset {subset:?} out of range for a {size}x{size} matrix")]
    SubsetOutOfRange { subset: Vec<usize>, size: usize },

    #[error("search budget exhausted after {examined} subsets")]
    BudgetExhausted { examined: usize },

    #[error("no ordering matches the target signature ({examined} prefix sets examined)")]
    NoMatchingOrdering { examined: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid ordering: {0}")]
    InvalidOrdering(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigen solve residual {residual:.3e} exceeds {bound:.1e}")]
    EigenResidual { residual: f64, bound: f64 },
}

impl Error {
    /// Strips [`Error::Entry`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Entry { source, .. } => source.root(),
            e => e,
        }
    }

    /// Errors the `auto` backend recovers from by switching to floats.
    pub fn is_exactness_failure(&self) -> bool {
        matches!(self.root(), Error::IrrationalValue { .. } | Error::InexactInput(_))
    }
}
