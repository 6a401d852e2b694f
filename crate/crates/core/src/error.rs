use std::path::PathBuf;

/// Errors raised anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("invalid value {value} at element {index}")]
    Validation { index: usize, value: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate scale: training maximum is {0}")]
    DegenerateScale(f64),
    #[error("shape error in {stage}: {detail}")]
    Shape { stage: &'static str, detail: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Training { epoch: usize, batch: usize, loss: f64 },
    #[error("ARIMA({p},{d},{q}) fit failed: {reason}")]
    Fit {
        p: usize,
        d: usize,
        q: usize,
        reason: String,
    },
    #[error("order selection failed, every candidate was rejected: {0}")]
    Selection(String),
    #[error("training data missing calendar months {0:?}")]
    Coverage(Vec<u32>),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            stage,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
