use thiserror::Error;

/// Error type shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular design matrix ({context})")]
    SingularDesign { context: String },

    #[error("separation detected in logistic fit ({context})")]
    Separation { context: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A sub-regression of the mediation system failed; `target` names it
    /// (e.g. "outcome" or "mediator 3").
    #[error("regression for {target} failed: {source}")]
    SubFit {
        target: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} bootstrap replicates failed (limit {limit})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        limit: usize,
    },

    #[error("fit failed on block {block}: {source}")]
    BlockFit {
        block: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("zero aggregated standard error with nonzero estimate for mediator {mediator}")]
    DegenerateVariance { mediator: usize },

    #[error("unknown scenario key: {0:?}")]
    UnknownScenario(String),

    #[error("column {0:?} not found in CSV header")]
    MissingColumn(String),

    #[error("binary outcome column {column:?} has values other than literal 0/1 in rows {rows:?}")]
    NotBinary { column: String, rows: Vec<usize> },

    #[error("no usable rows after filtering")]
    EmptyData,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable numeric category, used as the process exit code by the CLI.
    pub fn category_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::SingularDesign { .. } => 3,
            Error::Separation { .. } => 4,
            Error::Numeric(_) => 5,
            Error::SubFit { .. } => 6,
            Error::TooManyFailures { .. } => 7,
            Error::BlockFit { .. } => 8,
            Error::DegenerateVariance { .. } => 9,
            Error::UnknownScenario(_) => 10,
            Error::MissingColumn(_) => 11,
            Error::NotBinary { .. } => 12,
            Error::EmptyData => 13,
            Error::Csv(_) => 14,
            Error::Io(_) => 15,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
