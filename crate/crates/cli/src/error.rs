use std::fmt;

use mvhp_core::Error as CoreError;

/// Process-level error with the documented exit-code classes:
/// 1 = input, 2 = numerical, 3 = internal.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::TooShort { .. }
            | CoreError::DimensionMismatch { .. }
            | CoreError::InvalidConfig(_)
            | CoreError::NonFinite { .. }
            | CoreError::MissingAggregate { .. }
            | CoreError::LagTooLarge { .. } => CliError::Input(e.to_string()),
            CoreError::NotPositiveDefinite { .. }
            | CoreError::NoConvergence { .. }
            | CoreError::DegenerateLeadingCoefficient { .. }
            | CoreError::NegativeSnr { .. }
            | CoreError::OutOfInvertibleRange { .. }
            | CoreError::ZeroResidualVariance
            | CoreError::NegativeSnrEigenvalue { .. }
            | CoreError::AggregateFitFailed { .. } => CliError::Numerical(e.to_string()),
        }
    }
}
