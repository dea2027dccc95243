use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("point outside domain: {0}")]
    OutsideDomain(String),

    #[error("function is not a member of the family: {0}")]
    NotInFamily(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("grid exhausted: {0}")]
    GridExhausted(String),

    #[error("lattice of {points} points exceeds the cap of {cap}")]
    LatticeTooLarge { points: u128, cap: usize },

    /// Initial-guess search: no lattice point is close enough to the data,
    /// meaning C, L_{F,K} or the lattice radius were underestimated.
    #[error("no lattice point within the threshold {threshold:e} (closest residual {best_residual:e})")]
    NoInitialGuess { best_residual: f64, threshold: f64 },

    /// Landweber: the residual grew by more than the divergence factor.
    #[error("Landweber diverged at iteration {iteration} (residual {residual:e}); the step size is too large")]
    Divergence { iteration: usize, residual: f64 },

    #[error("configuration is not stable: {0}")]
    Unstable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
