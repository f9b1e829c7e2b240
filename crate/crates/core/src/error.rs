use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode {mode} for a tensor of order {order}")]
    InvalidMode { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown solver method `{0}`")]
    UnknownMethod(String),

    #[error("input tensor has zero Frobenius norm")]
    ZeroNorm,

    #[error("input contains non-finite values")]
    NonFiniteInput,

    #[error("non-finite values appeared at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
