use thiserror::Error;

/// Errors shared across the simulation and numerics modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("malformed distribution descriptor: {0}")]
    Descriptor(String),

    #[error("series diverges for p = {p}: requires p > 1/2")]
    Divergent { p: f64 },

    #[error("distribution has unbounded support; exact enumeration is not possible")]
    UnboundedSupport,

    #[error("enumeration horizon n = {n} exceeds the cap of {cap}")]
    EnumerationTooLarge { n: usize, cap: usize },

    #[error("simulation budget exceeded: {requested} steps requested, {budget} allowed")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("sample is not sorted in non-decreasing order")]
    UnsortedSample,

    #[error("sample contains NaN")]
    NanInSample,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
