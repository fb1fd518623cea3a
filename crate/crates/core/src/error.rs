use thiserror::Error;

/// Errors produced by the library.
///
/// Variants split into precondition failures (bad input, wrong dimensions,
/// points off the sphere) and numerical failures (a certificate that does not
/// verify, a local search that ran out of budget). The CLI maps the two groups
/// to different exit codes via [`Error::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("point is not on the unit sphere: |u| = {norm}")]
    NotOnBoundary { norm: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no inflation for degenerate map")]
    DegenerateMap,

    #[error("direction not admissible: {0}")]
    DirectionNotAdmissible(String),

    #[error("unsupported dimensions: {0}")]
    UnsupportedDimension(String),

    #[error("unverified certificate: {0}")]
    UnverifiedCertificate(String),

    #[error("local inflation search failed on cell {cell}: {reason}")]
    LocalSearchFailed { cell: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of a numerical procedure on otherwise valid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnverifiedCertificate(_) | Error::LocalSearchFailed { .. } | Error::Numerical(_)
        )
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
