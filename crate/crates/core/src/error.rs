use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("semigroup evaluated at negative time t = {0}")]
    NegativeTime(f64),

    #[error("cone violation: most negative entry is -{max_violation:e}")]
    ConeViolation { max_violation: f64 },

    #[error("argument outside the admissible ball: norm {norm} exceeds rho = {rho}")]
    DomainExceeded { norm: f64, rho: f64 },

    #[error("operator has no mass on the sphere: |T z|_C = {norm:e} at iteration {iteration}")]
    NoMass { norm: f64, iteration: usize },

    #[error("quadrature schemes disagree: relative delta {delta:e} exceeds {tol:e}")]
    QuadratureMismatch { delta: f64, tol: f64 },

    #[error(transparent)]
    Expression(#[from] ExprError),

    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors that stem from the input document rather than from a
    /// computation.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. }
                | Error::Validation(_)
                | Error::Expression(_)
                | Error::Json(_)
                | Error::InvalidGrid(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
