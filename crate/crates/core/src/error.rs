use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bit budget {budget} is below one feature per token ({required} bits required)")]
    BudgetTooSmall { budget: u64, required: u64 },

    #[error("bid matrix shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("score curve: {0}")]
    Curve(String),

    #[error("parameter file: {0}")]
    Params(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
