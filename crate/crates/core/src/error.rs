use thiserror::Error;

use crate::sdp::SdpSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("invalid subsystem layout: {0}")]
    Layout(String),

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("Schmidt coefficient {0} outside [0, 1/sqrt(2)]")]
    AlphaOutOfRange(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("clone symmetry violated: |rho1 - rho2|_F = {0:.3e}")]
    SymmetryViolation(f64),

    #[error("intertwiner construction failed: {0}")]
    Intertwiner(String),

    #[error("Kraus set invariant violated: {0}")]
    KrausInvariant(String),

    #[error("semidefinite program infeasible: {0}")]
    Infeasible(String),

    #[error("solver did not reach tolerance within {iterations} Newton steps (gap {gap:.3e})")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        best: Box<SdpSolution>,
    },

    #[error("sweep point {index} (alpha = {alpha}) failed: {source}")]
    SweepPoint {
        index: usize,
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("no kink above the noise floor: {0}")]
    NoKink(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
