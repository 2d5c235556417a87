use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid spec field `{field}`: {reason}")]
    InvalidSpec { field: String, reason: String },
    #[error("Hamiltonian is not Hermitian (max deviation {0:.3e})")]
    NonHermitian(f64),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("steady state is not unique (smallest singular values {smallest:.3e}, {second:.3e})")]
    AmbiguousSteadyState { smallest: f64, second: f64 },
    #[error("fit failed: {0}")]
    FitFailure(String),
    #[error("evaluation budget of {0} exhausted")]
    MaxEvaluations(usize),
    #[error("ill-conditioned problem (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("infeasible constraints: {0}")]
    Infeasible(String),
    #[error("temperature undefined: {0}")]
    NoTemperature(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSpec {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
