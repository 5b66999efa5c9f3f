use thiserror::Error;

/// Errors produced by the estimation and filtering pipeline.
///
/// Numerical diagnostics are carried as `f64` regardless of the scalar
/// type the computation ran in.
#[derive(Error, Debug)]
pub enum Error {
    #[error("matrix is not positive definite ({context})")]
    NotPositiveDefinite { context: &'static str },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("leading quartic coefficient is degenerate (|c4| = {magnitude:e})")]
    DegenerateLeadingCoefficient { magnitude: f64 },

    #[error("signal-noise ratio must be nonnegative, got {delta}")]
    NegativeSnr { delta: f64 },

    #[error("theta1 = {theta1} is outside the invertible range [-2, 0]")]
    OutOfInvertibleRange { theta1: f64 },

    #[error("residual variance is zero; series is identically zero under the filter")]
    ZeroResidualVariance,

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("aggregation vector {w} is missing from the fitted set")]
    MissingAggregate { w: String },

    #[error("scalar fit for aggregate {w} failed: {source}")]
    AggregateFitFailed {
        w: String,
        #[source]
        source: Box<Error>,
    },

    #[error("signal-noise eigenvalue {value:e} is negative beyond tolerance; regularize first")]
    NegativeSnrEigenvalue { value: f64 },

    #[error("lag {lag} too large for {n} observations (need lag < n/4)")]
    LagTooLarge { lag: usize, n: usize },

    #[error("non-finite value encountered in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
