use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {source}")]
    ImageDecode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("dataset layout problem:\n{}", problems.join("\n"))]
    DatasetLayout { problems: Vec<String> },

    #[error("{context}: expected shape {expected}, got {actual}")]
    ShapeMismatch {
        context: String,
        expected: String,
        actual: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {details}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        details: String,
    },

    #[error("pretrained weights not found; expected file at {path}")]
    MissingWeights { path: PathBuf },

    #[error("checkpoint format error in {path}: {details}")]
    CheckpointFormat { path: PathBuf, details: String },

    #[error("backbone mismatch: checkpoint was trained with {expected}, runtime requested {found}")]
    BackboneMismatch { expected: String, found: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(
        context: impl Into<String>,
        expected: impl Into<String>,
        actual: impl Into<String>,
    ) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}
