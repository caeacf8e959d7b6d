use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Fock truncation {n_max} too small: tail mass {tail:.3e} exceeds {limit:.1e}")]
    TruncationTooSmall { n_max: usize, tail: f64, limit: f64 },

    #[error("truncation mismatch: {left} vs {right}")]
    TruncationMismatch { left: usize, right: usize },

    #[error("asymmetric blocks are only defined for theta = 0 (got theta = {theta})")]
    AsymmetricPhase { theta: f64 },

    #[error("phase condition has no solution: delta = {delta} exceeds omega_nbar = {omega_nbar}")]
    NoPhaseSolution { delta: f64, omega_nbar: f64 },

    #[error("interaction time {tau} is outside the plateau window ({lower}, {upper})")]
    OutsidePlateau { tau: f64, lower: f64, upper: f64 },

    #[error("postselection probability {probability:.3e} is below {limit:.1e}")]
    DegenerateOutcome { probability: f64, limit: f64 },

    #[error("quadrature grid too small: boundary mass {mass:.3e}")]
    GridTooSmall { mass: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
