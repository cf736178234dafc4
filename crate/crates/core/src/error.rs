use thiserror::Error;

use crate::solver::ModeIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The per-mode transmission matrix is numerically singular.
    #[error("resonance: singular transmission matrix for mode {mode:?}")]
    Resonance { mode: ModeIndex },
    /// The radial integrator could not make progress.
    #[error("integration failure in layer {layer} at r = {r}")]
    Integration { layer: usize, r: f64 },
    /// Not enough data to produce an estimate.
    #[error("indeterminate: {0}")]
    Indeterminate(String),
    /// The request is well formed but outside the regime where the operation
    /// is meaningful.
    #[error("refused: {0}")]
    Refused(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by invalid input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Refused(_))
    }
}
