use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("edge relation contains a directed cycle through `{0}`")]
    CycleDetected(String),
    #[error("CPT for `{node}` has the wrong shape: expected {expected} entries, found {found}")]
    CptShapeMismatch {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("CPT row {row} of `{node}` sums to {sum}, not 1")]
    RowNotNormalized { node: String, row: usize, sum: f64 },
    #[error("CPT entry {value} in row {row} of `{node}` lies outside the open simplex")]
    ProbabilityOutOfInterior {
        node: String,
        row: usize,
        value: f64,
    },
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("invalid variable: {0}")]
    InvalidVariable(String),
    #[error("configuration leaves `{0}` unassigned")]
    PartialConfiguration(String),
    #[error("{what} needs {requested} rows but the cap is {cap}")]
    CapExceeded {
        what: &'static str,
        requested: u128,
        cap: u128,
    },
    #[error("variable `{0}` is not binary; the blockwise method handles binary networks only")]
    NonBinaryVariable(String),
    #[error("omega to eta Jacobian could not be triangularized: {0}")]
    TriangularizationFailed(String),
    #[error("basis does not match classifier: {0}")]
    BasisMismatch(String),
    #[error("no restart converged after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("Dirichlet pseudo-counts must be positive and finite")]
    InvalidAlpha,
    #[error("enumeration over {0} configurations is too large")]
    TooLarge(u128),
    #[error("row {row}, column `{column}`: unknown label `{label}`")]
    UnknownLabel {
        row: usize,
        column: String,
        label: String,
    },
    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("empty dataset: {0}")]
    EmptyData(String),
    #[error("prior not applicable: {0}")]
    PriorNotApplicable(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Coarse failure category, stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Io,
    /// Malformed or mismatched input files.
    Data,
    /// Structurally or numerically invalid network.
    Network,
    Cap,
    Dimension,
    Fit,
    Verification,
    Argument,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io(_) => ErrorKind::Io,
            Error::Parse { .. }
            | Error::UnknownLabel { .. }
            | Error::MissingValue { .. }
            | Error::SchemaMismatch(_) => ErrorKind::Data,
            Error::CycleDetected(_)
            | Error::CptShapeMismatch { .. }
            | Error::RowNotNormalized { .. }
            | Error::ProbabilityOutOfInterior { .. }
            | Error::InvalidIndex(_)
            | Error::InvalidVariable(_)
            | Error::PartialConfiguration(_) => ErrorKind::Network,
            Error::CapExceeded { .. } | Error::TooLarge(_) => ErrorKind::Cap,
            Error::NonBinaryVariable(_)
            | Error::TriangularizationFailed(_)
            | Error::BasisMismatch(_) => ErrorKind::Dimension,
            Error::NoConvergence { .. }
            | Error::EmptyData(_)
            | Error::PriorNotApplicable(_)
            | Error::InvalidAlpha => ErrorKind::Fit,
            Error::VerificationFailed(_) => ErrorKind::Verification,
            Error::InvalidArgument(_) => ErrorKind::Argument,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
