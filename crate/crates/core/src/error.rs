use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-unique steady state: null-space dimension {null_dim}, gap {gap:.3e}")]
    NonUniqueSteadyState { null_dim: usize, gap: f64 },

    #[error("steady-state residual {0:.3e} exceeds tolerance")]
    Residual(f64),

    #[error("non-unique stroboscopic state: eigenvalue-1 multiplicity {multiplicity}")]
    NonUniqueFloquet { multiplicity: usize },

    #[error("rate graph is not strongly connected")]
    Reducible,

    #[error("perturbation theory invalid: {0}")]
    PerturbationInvalid(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        Error::Dimension(format!("expected {expected}, got {got}"))
    }

    /// Process exit status: 3 when a solver gave up, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonUniqueSteadyState { .. }
            | Error::Residual(_)
            | Error::NonUniqueFloquet { .. }
            | Error::Reducible
            | Error::PerturbationInvalid(_)
            | Error::NotHermitian(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
