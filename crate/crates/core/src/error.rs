use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed CoNLL-X input. Line numbers are 1-based.
    #[error("line {line}: {message}")]
    Conllx { line: usize, message: String },

    /// Malformed props input. Line numbers are 1-based.
    #[error("line {line}: {message}")]
    Props { line: usize, message: String },

    #[error("invalid dependency tree: {0}")]
    Tree(String),

    #[error("invalid span structure: {0}")]
    Span(String),

    #[error("illegal tag sequence: {0}")]
    Tags(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("backward already ran on this tape")]
    BackwardTwice,

    #[error("loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("no gradients accumulated since the last update")]
    MissingGradients,

    #[error("unknown parameter: {0}")]
    UnknownParameter(String),

    #[error("duplicate parameter: {0}")]
    DuplicateParameter(String),

    #[error("decoding failed: {0}")]
    Decode(String),

    #[error("evaluation failed: {0}")]
    Eval(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incompatible model: {0}")]
    Incompatible(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps a parse error with the path of the file it came from.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        match self {
            Error::Conllx { line, message } => Error::Input(format!(
                "{}: line {}: {}",
                path.display(),
                line,
                message
            )),
            Error::Props { line, message } => Error::Input(format!(
                "{}: line {}: {}",
                path.display(),
                line,
                message
            )),
            Error::Serde(source) => Error::Json { path, source },
            other => other,
        }
    }
}
