use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameters or mismatched dimensions.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Input data violates a precondition (too few turns, bad distribution, ...).
    #[error("data error: {0}")]
    Data(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("rank-deficient system: {0}")]
    RankDeficient(String),
}
