use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-binary response {value} at row {row}")]
    NonBinaryResponse { row: usize, value: f64 },

    #[error("non-finite covariate at row {row}, column {col}")]
    NonFiniteCovariate { row: usize, col: usize },

    #[error("duplicate column label {0:?}")]
    DuplicateLabel(String),

    #[error("column index {index} out of range (d = {d})")]
    IndexOutOfRange { index: usize, d: usize },

    #[error("invalid submodel: {0}")]
    InvalidSubmodel(String),

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("separation detected: the likelihood has no interior maximizer")]
    SeparationDetected,

    #[error("singular Fisher information (Cholesky failed after ridge escalation)")]
    SingularInformation,

    #[error("bracketing infeasible: {0}")]
    BracketingInfeasible(String),

    #[error("MLE on the observed data failed: {0}")]
    InitialMleFailed(String),

    #[error("too many discarded simulated samples ({skipped} > limit {limit})")]
    TooManySkippedSamples { skipped: usize, limit: usize },

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("unsupported sparsity d0 = {d0} for d = {d}")]
    InvalidSparsity { d: usize, d0: usize },

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage labels peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
