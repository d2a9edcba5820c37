use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Core(#[from] qmx_core::Error),
    #[error("check failed: {0}")]
    Assertion(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Schema { .. } => 2,
            CliError::Core(qmx_core::Error::BudgetExceeded { .. }) => 4,
            _ => 3,
        }
    }
}
