use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input file does not follow the expected layout.
    #[error("format error: {0}")]
    Format(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    /// Operation called on an object in the wrong state (unlabeled data, bad dimension, ...).
    #[error("invalid state: {0}")]
    State(String),

    /// Non-finite or otherwise unusable numeric data.
    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error(
        "training diverged at epoch {epoch}, batch {batch} (loss {loss}); layer weight norms {layer_norms:?}"
    )]
    Diverged {
        epoch: usize,
        batch: usize,
        loss: f64,
        layer_norms: Vec<f64>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input data rather than misuse or I/O.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_)
                | Error::Validation(_)
                | Error::DuplicateId(_)
                | Error::Data(_)
                | Error::Shape(_)
                | Error::State(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}
