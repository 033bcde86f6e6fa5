use thiserror::Error;

/// Errors shared across the numerical modules.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The input object is too small for the requested operation
    /// (e.g. a tail transform of an order-0 series).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The offspring-law parameters violate a law invariant.
    #[error("invalid law: {0}")]
    InvalidLaw(String),

    /// A closed form hit a pole at the requested argument.
    #[error("pole error: {0}")]
    Pole(String),

    /// An iterative routine failed to reach the requested tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A quantity underflowed below representable range.
    #[error("underflow: {0}")]
    Underflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
