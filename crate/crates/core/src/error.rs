use thiserror::Error;

/// Errors produced by simulation, estimation and file handling.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rate {name} = {value} outside [{lo}, {hi}]")]
    RateOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("register of {n} qubits exceeds the cap of {cap}")]
    RegisterTooLarge { n: usize, cap: usize },

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("post-selection starved: probability {0:e} below floor")]
    PostSelectionStarved(f64),

    #[error("purification denominator vanished: {0:e}")]
    DenominatorVanished(f64),

    #[error("denominator collapse (ancilla near |->): 1 + <X_a> = {0:e}")]
    DenominatorCollapse(f64),

    #[error("tomography degenerate, no dominant eigenvector (Bloch norm {0:e})")]
    TomographyDegenerate(f64),

    #[error("no post-selected shots")]
    NoPostSelectedShots,

    #[error("term {term}: {source}")]
    Term {
        term: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable name, printed by the CLI on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse-error",
            Error::InvalidInput(_) => "invalid-input",
            Error::RateOutOfRange { .. } => "rate-out-of-range",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::RegisterTooLarge { .. } => "register-too-large",
            Error::NotHermitian(_) => "not-hermitian",
            Error::PostSelectionStarved(_) => "post-selection-starved",
            Error::DenominatorVanished(_) => "purification-denominator-vanished",
            Error::DenominatorCollapse(_) => "denominator-collapse",
            Error::TomographyDegenerate(_) => "tomography-degenerate",
            Error::NoPostSelectedShots => "no-post-selected-shots",
            Error::Term { source, .. } => source.name(),
            Error::Io(_) => "io-error",
        }
    }

    /// True for failures caused by the input (files, arguments, ranges)
    /// rather than by the numerics of a run.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::InvalidInput(_)
            | Error::RateOutOfRange { .. }
            | Error::DimensionMismatch { .. }
            | Error::RegisterTooLarge { .. }
            | Error::NotHermitian(_)
            | Error::Io(_) => true,
            Error::Term { source, .. } => source.is_input_error(),
            _ => false,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(format!("json: {e}"))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
