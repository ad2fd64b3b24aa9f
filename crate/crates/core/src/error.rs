use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid units: {0}")]
    InvalidUnits(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("state is not normalizable (squared norm {0})")]
    NotNormalizable(f64),

    #[error("state is not contained by the grid: {0}")]
    Containment(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("joint (x, p) moments are unavailable for a g-transformed moment set")]
    JointUnavailable,

    #[error("term degree {0} exceeds the supported maximum of 8")]
    DegreeOverflow(u32),

    #[error("aliasing detected: mass {0:e} at the padded-domain boundary")]
    Aliasing(f64),

    #[error("near-singular covariance (condition number {0:e})")]
    SingularCovariance(f64),
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidUnits(_)
                | Error::InvalidArgument(_)
                | Error::Parse(_)
                | Error::JointUnavailable
                | Error::DegreeOverflow(_)
        )
    }
}
