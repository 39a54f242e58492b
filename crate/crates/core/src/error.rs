use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular")]
    Singular,
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inadmissible triple: {0}")]
    Inadmissible(String),
    #[error("overlapping intervals: {0}")]
    Overlap(String),
    #[error("repeated digit {0}")]
    RepeatedDigit(String),
    #[error("dilation is not expanding")]
    NotExpanding,
    #[error("digit set is not complete for the dilation: {0}")]
    IncompleteDigits(String),
    #[error("cell budget exceeded: {needed} cells requested, budget {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("dilation is not diagonal; use the raster verifier")]
    NonDiagonal,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degenerate cone: {0}")]
    DegenerateCone(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("no tile contains the point {0}")]
    Uncovered(String),
    #[error("iteration did not close within {0} steps")]
    NoCycle(u32),
}

pub type Result<T> = std::result::Result<T, Error>;
