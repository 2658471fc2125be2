use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("resolution {value} on axis {axis} must be a power of two and at least 2")]
    Resolution { axis: usize, value: usize },

    #[error("rectangle at level {level} is not aligned with the grid cells (resolution too coarse for the requested depth)")]
    NotAligned { level: u32 },

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("weight is not strictly positive at cell {cell:?} (value {value})")]
    NonPositiveWeight { cell: Vec<usize>, value: f64 },

    #[error("{message} at position {position}")]
    Expression { position: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pair budget exceeded: {pairs} cell pairs needed but the budget is {budget}; try resolution {suggested} or a larger budget")]
    PairBudget { pairs: u64, budget: u64, suggested: usize },

    #[error("unknown check id `{id}`; valid ids are {valid}")]
    UnknownCheck { id: String, valid: String },

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
