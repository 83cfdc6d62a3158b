use std::io;

/// Errors surfaced by parsing, index computation, classification,
/// comparison, and export.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("column `{0}` not found in input header")]
    MissingColumn(String),

    #[error("line {line}, column `{column}`: cannot parse {raw:?}: {reason}")]
    Parse {
        line: u64,
        column: String,
        raw: String,
        reason: String,
    },

    #[error("duplicate FIPS {0}")]
    DuplicateFips(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid GeoJSON: {0}")]
    InvalidGeoJson(String),

    #[error("join produced no counties")]
    EmptyJoin,

    #[error("degenerate normalization domain: {0}")]
    DegenerateDomain(String),

    #[error("class count must be at least 2, got {0}")]
    InvalidK(usize),

    #[error("expected {expected} class labels, got {got}")]
    LabelMismatch { expected: usize, got: usize },

    #[error("need at least 2 paired observations, got {0}")]
    InsufficientData(usize),

    #[error("{side} values have zero rank variance")]
    ConstantInput { side: &'static str },

    #[error("paired inputs differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("class index {found} exceeds class count {expected}")]
    ClassCountMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inconsistent pipeline state: {0}")]
    Inconsistent(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map_or(0, csv::Position::line);
        match err.into_kind() {
            csv::ErrorKind::Io(io_err) => Error::Io(io_err),
            kind => Error::Parse {
                line,
                column: String::new(),
                raw: String::new(),
                reason: format!("{kind:?}"),
            },
        }
    }
}
