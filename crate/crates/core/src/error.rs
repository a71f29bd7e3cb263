use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("subdomain is not aligned with the mesh: {0}")]
    Misaligned(String),

    #[error("subdomain has not been marked on the mesh")]
    SubdomainUnmarked,

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("invalid measure: {0}")]
    Measure(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("linear solver failed after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("in field `{field}`: {source}")]
    Field {
        field: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Mesh(_) => "mesh",
            Error::Misaligned(_) => "misaligned",
            Error::SubdomainUnmarked => "subdomain_unmarked",
            Error::TimeGrid(_) => "time_grid",
            Error::Measure(_) => "measure",
            Error::Syntax { .. } => "syntax",
            Error::UnknownIdentifier { .. } => "unknown_identifier",
            Error::Evaluation(_) => "evaluation",
            Error::Solver { .. } => "solver",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::Dimension(_) => "dimension",
            Error::Config(_) => "config",
            Error::Field { source, .. } => source.kind(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// Byte offset for parse errors.
    pub fn offset(&self) -> Option<usize> {
        match self {
            Error::Syntax { offset, .. } | Error::UnknownIdentifier { offset, .. } => Some(*offset),
            Error::Field { source, .. } => source.offset(),
            _ => None,
        }
    }
}

impl Error {
    /// Field name for errors raised while reading a configuration.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Field { field, .. } => Some(field),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
