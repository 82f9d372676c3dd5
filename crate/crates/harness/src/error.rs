use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
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
    #[error(transparent)]
    Numeric(#[from] spiked_amp::Error),
}

impl HarnessError {
    /// Process exit status for the CLI.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io { .. } | HarnessError::Csv { .. } => 3,
            HarnessError::Numeric(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
