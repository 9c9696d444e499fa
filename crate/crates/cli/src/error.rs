use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(
        "{path} was written under config {found}, current config is {expected}; \
         use a fresh --out-dir or delete the file"
    )]
    ConfigMismatch { path: PathBuf, found: String, expected: String },
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Core(#[from] asl_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) | CliError::ConfigMismatch { .. } => 2,
            CliError::Io { .. } | CliError::Csv { .. } => 3,
            CliError::Core(e) => match e {
                asl_core::Error::InvalidConfig(_) | asl_core::Error::InvalidArgument(_) => 2,
                asl_core::Error::Io(_) | asl_core::Error::CacheMismatch(_) => 3,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
