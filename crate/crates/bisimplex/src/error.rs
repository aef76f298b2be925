use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rotation axis is not unit: n.n = {0}")]
    InvalidAxis(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("branch ambiguity: {0}")]
    Branch(String),
    #[error("angle outside the resolved sector: {0}")]
    SectorViolation(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}
