use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("coordinate {value} at row {row}, column {column} lies outside [0, 1]")]
    OutOfUnitRange { row: usize, column: usize, value: f64 },

    #[error("R + eta*I is not positive definite (eta = {eta:e}, largest jitter tried = {jitter:e})")]
    SingularMatrix { eta: f64, jitter: f64 },

    #[error("lasso did not converge after {sweeps} sweeps (duality gap {gap:e}, KKT residual {kkt:e})")]
    LassoNotConverged { sweeps: usize, gap: f64, kkt: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
