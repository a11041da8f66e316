use crate::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("nonphysical determinant {0}: density requires Re(det) <= 0 and Im(det) ~ 0")]
    NonphysicalDeterminant(Complex),

    #[error("coordinate frame mismatch: {0}")]
    CoordinateFrame(String),

    #[error("singular transform (|det| = {0:e})")]
    SingularTransform(f64),

    #[error("perturbation regime violated: |b| = {0} must be < 1")]
    PerturbationRegime(f64),

    #[error("singular metric at {at:?} (|det g| = {det:e})")]
    SingularMetric { at: [f64; 4], det: f64 },

    #[error("sign-convention calibration failed: {0}")]
    Calibration(String),

    #[error("ill-conditioned probe: {0}")]
    IllConditionedProbe(String),

    #[error("bin width mismatch: {0} vs {1}")]
    BinMismatch(f64, f64),

    #[error("threshold not bracketed: {0}; widen the grid")]
    Bracket(String),

    #[error("series too short: {0} samples (need at least 4)")]
    SeriesTooShort(usize),

    #[error("index {0} out of range")]
    IndexOutOfRange(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for numerical failures (singular metric, bracket failure, ...) as
    /// opposed to bad parameters or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonphysicalDeterminant(_)
                | Error::SingularTransform(_)
                | Error::SingularMetric { .. }
                | Error::Calibration(_)
                | Error::IllConditionedProbe(_)
                | Error::Bracket(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
