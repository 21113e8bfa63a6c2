use thiserror::Error;

/// Errors raised by the laboratory.
///
/// The variants map onto the CLI exit codes: argument errors exit with 1,
/// structural and computation errors with 2, property violations with 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// Malformed input: wrong dimensions, nonpositive measures, bad flags.
    #[error("argument error: {0}")]
    Argument(String),
    /// The input violates a structural hypothesis (nondegeneracy, boundedness).
    #[error("structural error: {0}")]
    Structural(String),
    /// A numerical routine failed to converge or produced an unusable result.
    #[error("computation error: {0}")]
    Computation(String),
    /// A certified mathematical property failed beyond its error bars.
    #[error("property violation: {0}")]
    PropertyViolation(String),
}

impl LabError {
    pub fn argument(msg: impl Into<String>) -> Self {
        LabError::Argument(msg.into())
    }

    pub fn structural(msg: impl Into<String>) -> Self {
        LabError::Structural(msg.into())
    }

    pub fn computation(msg: impl Into<String>) -> Self {
        LabError::Computation(msg.into())
    }

    pub fn violation(msg: impl Into<String>) -> Self {
        LabError::PropertyViolation(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Argument(_) => 1,
            LabError::Structural(_) | LabError::Computation(_) => 2,
            LabError::PropertyViolation(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
