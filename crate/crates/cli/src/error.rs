use lpg_core::classifiers::ClassifierError;
use lpg_core::embedding::EmbedError;
use lpg_core::evaluation::EvalError;
use lpg_core::ingest::IngestError;
use lpg_core::tasks::TaskError;
use thiserror::Error;

/// A failed command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Malformed or inconsistent input data (exit 2).
    #[error("{0}")]
    Data(String),
    /// Embedding provider or transport failure (exit 3).
    #[error("{0}")]
    Provider(String),
    /// The task could not be assembled or trained (exit 4).
    #[error("{0}")]
    Task(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Provider(_) => 3,
            CliError::Task(_) => 4,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EmbedError> for CliError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::Transport(_)
            | EmbedError::Protocol(_)
            | EmbedError::Auth(_)
            | EmbedError::DimensionMismatch { .. } => CliError::Provider(e.to_string()),
            // Provider and cache disagree: a configuration problem.
            EmbedError::Cache(_) => CliError::Usage(e.to_string()),
            EmbedError::CacheIo(_) | EmbedError::InvalidInput(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<TaskError> for CliError {
    fn from(e: TaskError) -> Self {
        match e {
            TaskError::Embed(inner) => inner.into(),
            TaskError::UnknownNode(_) | TaskError::Graph(_) => CliError::Data(e.to_string()),
            TaskError::NoUsableExamples(_)
            | TaskError::InsufficientNegatives { .. }
            | TaskError::InvalidConfig(_)
            | TaskError::Classifier(_) => CliError::Task(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidClassifiers(_) | EvalError::InvalidFraction(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Task(e.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        CliError::Task(e.to_string())
    }
}

/// Wraps an I/O failure on `path` as a data error.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}
