use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("atoms {i} and {j} are closer than {threshold:e} (separation {separation:e})")]
    NearCoincidence {
        i: usize,
        j: usize,
        separation: f64,
        threshold: f64,
    },

    #[error("array generation failed: {0}")]
    GenerationFailure(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("defective eigensystem: |L^T R| = {overlap:e} for mode {mode}")]
    Defective { mode: usize, overlap: f64 },

    #[error("left/right eigenvalue pairing failed: mode {mode} mismatched by {distance:e}")]
    Pairing { mode: usize, distance: f64 },

    #[error("dark pole: eigenvalue {mode} coincides with the drive frequency")]
    DarkPole { mode: usize },

    #[error("zero drive vector")]
    ZeroDrive,

    #[error("excitation amplitude {0} exceeds the weak-drive limit")]
    StrongExcitation(f64),

    #[error("transmission undefined for zero drive rate")]
    UndefinedTransmission,

    #[error("numerical inconsistency: {0}")]
    Numerical(String),

    #[error("time step {0:e} too large for stable propagation")]
    StepSize(f64),

    #[error("all {0} trials were excluded")]
    AllExcluded(usize),

    #[error("linear algebra failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
