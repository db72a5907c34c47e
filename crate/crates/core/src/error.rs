use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One problem found while loading or validating input, with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub source: String,
    pub line: Option<u64>,
    pub message: String,
}

impl Issue {
    pub fn new(source: impl Into<String>, line: Option<u64>, message: impl Into<String>) -> Self {
        Issue {
            source: source.into(),
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.source, line, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown value {value} in dimension {dimension}")]
    UnknownValue { dimension: String, value: String },

    #[error("unknown dimension {0}")]
    UnknownDimension(String),

    #[error("level {level} out of range for dimension {dimension} (depth {depth})")]
    InvalidLevel {
        dimension: String,
        level: usize,
        depth: usize,
    },

    #[error("dimension {0} has fewer than two levels")]
    DegenerateHierarchy(String),

    #[error("tuple has {found} slots but the schema has {expected} dimensions")]
    Shape { expected: usize, found: usize },

    #[error("size guard exceeded: {count} tuples, limit {limit}")]
    SizeGuard { count: u128, limit: u128 },

    #[error("aggregation over an empty cover")]
    EmptyCover,

    #[error("invalid tuple spec: {0}")]
    TupleSpec(String),

    #[error("{} validation issue(s):\n{}", .0.len(), render_issues(.0))]
    Invalid(Vec<Issue>),

    #[error("invalid config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(source: impl Into<String>, line: Option<u64>, message: impl Into<String>) -> Self {
        Error::Invalid(vec![Issue::new(source, line, message)])
    }

    /// Short machine-readable category, used for diagnostics and exit codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownValue { .. } => "unknown-value",
            Error::UnknownDimension(_) => "unknown-dimension",
            Error::InvalidLevel { .. } => "invalid-level",
            Error::DegenerateHierarchy(_) => "degenerate-hierarchy",
            Error::Shape { .. } => "shape",
            Error::SizeGuard { .. } => "size-guard",
            Error::EmptyCover => "empty-cover",
            Error::TupleSpec(_) => "tuple-spec",
            Error::Invalid(_) => "validation",
            Error::Config { .. } => "config",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
        }
    }
}

fn render_issues(issues: &[Issue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}
