use thiserror::Error;

/// Errors surfaced by every layer of the crate.
///
/// The variants map onto the CLI exit codes: validation failures exit 2,
/// resolution/coverage failures exit 3, I/O failures exit 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A function was handed a grid function in the wrong representation.
    #[error("contract violation: expected {expected}-space data, got {found}-space")]
    SpaceTag {
        expected: &'static str,
        found: &'static str,
    },

    /// A parameter violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration or norm specification failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// The requested object cannot be represented on the hosting grid.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A randomization plan's active set does not cover the data's support.
    #[error("coverage error: {0}")]
    Coverage(String),

    /// The input makes the requested quantity meaningless (e.g. a zero
    /// denominator in an inequality ratio).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A regression fit was requested with too little data.
    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SpaceTag { .. }
            | Error::InvalidInput(_)
            | Error::Validation(_)
            | Error::Degenerate(_)
            | Error::Fit(_) => 2,
            Error::Resolution(_) | Error::Coverage(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
