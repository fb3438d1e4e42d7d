use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid ring parameters: {0}")]
    InvalidRing(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by a non-unit")]
    NotUnit,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not a root: {0}")]
    NotARoot(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid lift: {0}")]
    InvalidLift(String),
    #[error("degenerate denominator at root {0}")]
    DegenerateDenominator(usize),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("search exhausted: {0}")]
    Exhausted(String),
    #[error("data inconsistency: {0}")]
    Data(String),
    #[error("infeasible specification: {0}")]
    Infeasible(String),
    #[error("model inconsistency: {0}")]
    Model(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
