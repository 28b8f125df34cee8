use thiserror::Error;

/// Unified error type for the whole crate.
///
/// Variants are grouped by origin: sample construction, degenerate
/// statistics, linear algebra, file parsing, and configuration. The CLI
/// maps these onto process exit codes, so keep the classification in
/// [`Error::is_degenerate`] / [`Error::is_data`] in sync when adding
/// variants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("too few observations: got {got}, need at least {need}")]
    TooFewObservations { got: usize, need: usize },

    #[error("input vectors have mismatched lengths or dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },

    #[error("input contains a non-finite value at position {index}")]
    NonFiniteData { index: usize },

    #[error("vector has zero variance; correlation is undefined")]
    ConstantVector,

    #[error("correlation magnitude {r} is numerically 1; Fisher transform undefined")]
    DegenerateCorrelation { r: f64 },

    #[error("pooled standard error is zero; t statistic undefined")]
    DegenerateVariances,

    #[error("covariance matrix is numerically singular (pivot {pivot:e} at row {row})")]
    SingularCovariance { row: usize, pivot: f64 },

    #[error("resample budget must be at least 1")]
    EmptyResamplePlan,

    #[error("{path}:{row}:{col}: cell {contents:?} is not numeric")]
    NonNumericCell {
        path: String,
        row: usize,
        col: usize,
        contents: String,
    },

    #[error("{path}: row {row} has {got} fields but the first data row has {expected}")]
    RaggedRows {
        path: String,
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("labels define {got} groups; exactly two are required")]
    LabelGroups { got: usize },

    #[error("label vector has {labels} entries but the matrix has {rows} rows")]
    LabelMismatch { labels: usize, rows: usize },

    #[error("no benchmark record matches baseline cell (test={test}, n={n}, B={b})")]
    MissingPair { test: String, n: usize, b: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by a degenerate statistic on otherwise
    /// well-formed input (constant data, singular covariance, ...).
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::ConstantVector
                | Error::DegenerateCorrelation { .. }
                | Error::DegenerateVariances
                | Error::SingularCovariance { .. }
        )
    }

    /// True for errors caused by unreadable or malformed input data.
    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::TooFewObservations { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFiniteData { .. }
                | Error::NonNumericCell { .. }
                | Error::RaggedRows { .. }
                | Error::Parse { .. }
                | Error::LabelGroups { .. }
                | Error::LabelMismatch { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
