use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: entry ({row}, {col}) deviates by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NotPositive { eigenvalue: f64 },

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("state violates positivity: {0}")]
    PositivityViolation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("correlation matrix is singular (det = {det:e}); use the degenerate classification")]
    SingularCorrelationMatrix { det: f64 },

    #[error("quadric does not describe an ellipsoid: {0}")]
    NotAnEllipsoid(String),

    #[error("state has no X structure; analytic method unsupported")]
    UnsupportedStructure,

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error(
        "conjecture violated at lambda={lambda}, alpha={alpha}, beta={beta}: \
         constrained optimum {constrained} vs unconstrained {unconstrained}"
    )]
    ConjectureViolation {
        lambda: f64,
        alpha: f64,
        beta: f64,
        constrained: f64,
        unconstrained: f64,
    },
}

impl Error {
    /// True for errors that stem from an invalid input state.
    pub fn is_state_validation(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian { .. }
                | Error::TraceNotOne { .. }
                | Error::NotPositive { .. }
                | Error::NonFinite { .. }
                | Error::PositivityViolation(_)
        )
    }
}
