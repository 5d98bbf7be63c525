use thiserror::Error;

/// Errors raised by estimators, designs and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("total weight is zero")]
    ZeroWeight,

    #[error("negative weight at index {0}")]
    NegativeWeight(usize),

    #[error("variable is constant ({0})")]
    Constant(&'static str),

    #[error("factor group is invalid: {0}")]
    InvalidGroup(String),

    #[error("column {0} is categorical where a continuous column is required")]
    CategoricalColumn(usize),

    #[error("kernel kind mismatch: {0}")]
    KindMismatch(String),

    #[error("dimension {0} has zero spread")]
    DegenerateDimension(usize),

    #[error("singular covariance matrix ({0})")]
    SingularCovariance(&'static str),

    #[error("sample size {n} exceeds configured limit {limit}")]
    SizeLimit { n: usize, limit: usize },

    #[error("self-measure unavailable: {0}")]
    Unavailable(String),

    #[error("incompatible measure configuration: {0}")]
    Incompatible(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
