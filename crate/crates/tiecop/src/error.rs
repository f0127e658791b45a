use thiserror::Error;

/// Library error taxonomy. Variants map onto the CLI exit-code contract:
/// input problems (`Data`, `Config`, `Domain`, `InvalidParameter`, ...) are
/// user errors, `NonConvergence` is an optimizer failure that still carries
/// the best point seen.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("finite-difference step too large relative to parameter bounds: {0}")]
    StepSize(String),

    #[error("identifiability grid too large: {size} points exceeds cap {cap}; subsample the margins")]
    GridTooLarge { size: usize, cap: usize },

    #[error("model not identifiable: parameter dimension {p} exceeds grid cardinality {q_n}")]
    NotIdentifiable { p: usize, q_n: usize },

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("optimizer failed to converge from every start ({0})")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
