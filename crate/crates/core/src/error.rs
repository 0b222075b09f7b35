use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates a documented invariant; `field` names the offender.
    #[error("validation error in {field}: {message}")]
    Validation { field: String, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("data error at flat index {index}: {message}")]
    Data { index: usize, message: String },

    #[error("length error: expected {expected} bytes, found {actual}")]
    Length { expected: u64, actual: u64 },

    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("unknown key: {0}")]
    Key(String),

    #[error("index {index} out of range (len {len})")]
    Index { index: usize, len: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("rank error in manifold {manifold}: {message}")]
    Rank { manifold: String, message: String },

    #[error("degenerate direction in manifold {manifold}: centroid vanishes after centering")]
    DegenerateDirection { manifold: String },

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error("baseline alignment error: no baseline row for layer {layer}, metric {metric}, scheme {scheme}")]
    Alignment {
        layer: usize,
        metric: String,
        scheme: String,
    },

    #[error("unknown task: {0}")]
    UnknownTask(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the environment rather than by the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
