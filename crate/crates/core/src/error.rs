use thiserror::Error;

/// Errors produced by the simulation and reconstruction kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pose: {0}")]
    InvalidPose(String),

    #[error("invalid antenna array: {0}")]
    InvalidArray(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("transmitted symbol is zero on valid subcarrier {index}")]
    ZeroSubcarrier { index: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("transform is not rigid (orthonormality error {0:.3e})")]
    NonRigidTransform(f64),

    #[error("no valid pixels shared by prediction and ground truth")]
    EmptyValidSet,

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("ground-truth bounding box is degenerate (diagonal {0})")]
    DegenerateBoundingBox(f64),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn json(path: &std::path::Path, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.display().to_string(),
            source,
        }
    }
}
