use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("insufficient array: need at least {needed} microphones, got {got}")]
    InsufficientArray { needed: usize, got: usize },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("out of bounds: {0}")]
    Bounds(String),
    #[error("invalid training request: {0}")]
    InvalidTraining(String),
    #[error("within-class scatter is singular in the projected space; add more images per class")]
    SingularScatter,
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("face preprocessing failed: {0}")]
    PreprocessingFailed(String),
    #[error("invalid LBPH grid: {0}")]
    InvalidGrid(String),
    #[error("no model: {0}")]
    NoModel(String),
    #[error("eigen solver did not converge after {sweeps} sweeps")]
    NotConverged { sweeps: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported file format: {0}")]
    Format(String),
    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
