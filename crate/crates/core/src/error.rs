use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The problem or its parameters are inconsistent (e.g. a vanishing determinant).
    #[error("configuration error: {0}")]
    Config(String),
    /// A computation produced a NaN or an infinity.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Two grid functions live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
