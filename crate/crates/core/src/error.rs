use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Rejections raised while reading datasets or score files. Every variant
/// carries the 1-based line number it was detected on.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: value out of range: {value} for variable '{variable}' with arity {arity}")]
    ValueOutOfRange {
        line: usize,
        variable: String,
        value: String,
        arity: usize,
    },
    #[error("line {line}: variable '{variable}' has arity {arity}, need at least 2")]
    ArityTooSmall {
        line: usize,
        variable: String,
        arity: usize,
    },
    #[error("line {line}: empty dataset")]
    EmptyDataset { line: usize },
    #[error("line {line}: not a number: '{token}'")]
    InvalidNumber { line: usize, token: String },
    #[error("line {line}: unknown parent '{name}'")]
    UnknownParent { line: usize, name: String },
    #[error("line {line}: duplicate parent set")]
    DuplicateParentSet { line: usize },
    #[error("line {line}: section count mismatch: declared {declared}, found {found}")]
    SectionCountMismatch {
        line: usize,
        declared: usize,
        found: usize,
    },
    #[error("line {line}: parent count mismatch: declared {declared}, listed {found}")]
    ParentCountMismatch {
        line: usize,
        declared: usize,
        found: usize,
    },
    #[error("line {line}: entry count mismatch: declared {declared}, found {found}")]
    EntryCountMismatch {
        line: usize,
        declared: usize,
        found: usize,
    },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::MalformedHeader { line, .. }
            | ParseError::RaggedRow { line, .. }
            | ParseError::ValueOutOfRange { line, .. }
            | ParseError::ArityTooSmall { line, .. }
            | ParseError::EmptyDataset { line }
            | ParseError::InvalidNumber { line, .. }
            | ParseError::UnknownParent { line, .. }
            | ParseError::DuplicateParentSet { line }
            | ParseError::SectionCountMismatch { line, .. }
            | ParseError::ParentCountMismatch { line, .. }
            | ParseError::EntryCountMismatch { line, .. }
            | ParseError::Invalid { line, .. } => *line,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("parent set too large: instantiation count of {parents:?} for variable {child} overflows")]
    ParentSetTooLarge { child: usize, parents: Vec<usize> },
    #[error("missing local score for variable {child} with parents {parents:?}")]
    MissingLocalScore { child: usize, parents: Vec<usize> },
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no acyclic network can be built from the candidate parent sets")]
    Infeasible,
}

impl Error {
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity(_))
    }
}
