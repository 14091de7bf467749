use augrank_core::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing input: {0}")]
    Missing(String),
    #[error("bad input: {0}")]
    Format(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: Error,
    },
    #[error(transparent)]
    Bare(#[from] Error),
    #[error("{0}")]
    Internal(String),
}

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_MISSING: u8 = 3;
pub const EXIT_FORMAT: u8 = 4;

fn core_code(e: &Error) -> u8 {
    match e {
        e if e.is_format_error() => EXIT_FORMAT,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING,
        Error::MissingAccuracy(_) => EXIT_MISSING,
        Error::InvalidSpec(_) | Error::InvalidParameter(_) | Error::InvalidFraction(_) => EXIT_CONFIG,
        Error::EmptySet
        | Error::DuplicateId(_)
        | Error::MixedLabels { .. }
        | Error::EmptyClass { .. }
        | Error::GroupCoverage(_)
        | Error::EmptyResult
        | Error::LengthMismatch { .. }
        | Error::DimensionMismatch(..)
        | Error::ClassCountMismatch { .. }
        | Error::DuplicateName(_)
        | Error::DegenerateInput(_) => EXIT_FORMAT,
        _ => EXIT_INTERNAL,
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Missing(_) => EXIT_MISSING,
            CliError::Format(_) => EXIT_FORMAT,
            CliError::Core { source, .. } | CliError::Bare(source) => core_code(source),
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

/// Adds a context string to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, Error> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core { context: what(), source })
    }
}
