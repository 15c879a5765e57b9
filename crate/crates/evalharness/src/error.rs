use std::path::PathBuf;

use genomagent_core::TaskKind;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no task data files found in {0}")]
    MissingTaskFile(PathBuf),
    #[error("{file}: no questions")]
    EmptyTaskFile { file: PathBuf },
    #[error("{first} and {second} both hold {task} questions")]
    DuplicateTask { task: TaskKind, first: PathBuf, second: PathBuf },
    #[error("{file}, item {index}: {message}")]
    GoldParseFailure { file: PathBuf, index: usize, message: String },
    #[error("{file}: {message}")]
    Malformed { file: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot average an empty list")]
    EmptyInput,
    #[error("gold answer variant does not fit task {0}")]
    VariantMismatch(TaskKind),
    #[error("score {0} is outside [0, 1]")]
    OutOfRange(String),
    #[error("not a decimal: {0:?}")]
    Decimal(String),
}

impl EvalError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EvalError::Io { path: path.into(), source }
    }
}
