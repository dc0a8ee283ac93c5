use std::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the localization and control routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A direction was requested from a vector of (near-)zero length.
    ZeroVector,
    /// Observer and target (or estimate and seeker) positions coincide.
    CoincidentPoints { seeker: Option<usize> },
    /// A tangent vector is not orthogonal to its base point on the sphere.
    TangentNotOrthogonal,
    /// The measurement geometry does not pin down a solution
    /// (e.g. all bearings collinear, singular normal matrix).
    DegenerateGeometry { context: &'static str },
    /// A covariance matrix has a non-positive eigenvalue.
    Singular,
    /// A configuration value is out of its admissible range.
    InvalidParameter { name: &'static str, reason: &'static str },
    /// Two containers that must agree in length do not.
    DimensionMismatch { what: &'static str, expected: usize, actual: usize },
    /// An operation requires more agents than were supplied.
    InsufficientAgents { required: usize, actual: usize },
    /// A closed-loop step failed; wraps the underlying error.
    StepFailed { step: usize, source: Box<Error> },
    /// More than the tolerated fraction of Monte Carlo trials failed.
    TooManyTrialFailures { failed: usize, trials: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroVector => write!(f, "cannot normalize a zero-length vector"),
            Error::CoincidentPoints { seeker: Some(i) } => {
                write!(f, "seeker {i} coincides with the target position")
            }
            Error::CoincidentPoints { seeker: None } => {
                write!(f, "observer and target positions coincide")
            }
            Error::TangentNotOrthogonal => {
                write!(f, "tangent vector is not orthogonal to its base bearing")
            }
            Error::DegenerateGeometry { context } => {
                write!(f, "degenerate measurement geometry: {context}")
            }
            Error::Singular => write!(f, "matrix is singular or not positive definite"),
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::DimensionMismatch { what, expected, actual } => {
                write!(f, "dimension mismatch in {what}: expected {expected}, got {actual}")
            }
            Error::InsufficientAgents { required, actual } => {
                write!(f, "need at least {required} seeker agents, got {actual}")
            }
            Error::StepFailed { step, source } => {
                write!(f, "simulation step {step} failed: {source}")
            }
            Error::TooManyTrialFailures { failed, trials } => {
                write!(f, "{failed} of {trials} Monte Carlo trials failed (more than 1% tolerated)")
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::StepFailed { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
