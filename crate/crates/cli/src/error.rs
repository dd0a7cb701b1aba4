use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] decl::Error),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("training routes disagree: decomposed objective {decl} but global objective {global}")]
    RouteMismatch { decl: f64, global: f64 },
}

impl CliError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// 2 for configuration and input errors, 3 for I/O failures and 4 when
    /// a computation would exceed the enumeration cap.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(decl::Error::Io(_)) | CliError::Core(decl::Error::Csv(_)) => 3,
            CliError::Core(decl::Error::SpaceTooLarge { .. }) => 4,
            CliError::RouteMismatch { .. } => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(decl::Error::Io(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;
