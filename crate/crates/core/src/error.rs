use alloc::string::String;

/// Errors raised by model construction, evaluation and the linear-algebra kernels.
///
/// Solver outcomes that are not faults (iteration limits, failed line searches)
/// are reported through status values instead.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector length {0} is not a triangular number")]
    NotTriangular(usize),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("penalty domain violated in block {block}: pI - A(x) is not positive definite")]
    PenaltyDomain { block: usize },
    #[error("barrier domain violated in block {block}: constraint is not strictly feasible")]
    BarrierDomain { block: usize },
    #[error("unsupported operation: {0}")]
    Unsupported(&'static str),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("inertia correction failed after {0} regularization attempts")]
    InertiaCorrection(u32),
    #[error("penalty update needs a feasible point but none is stored")]
    RestartRequired,
}

pub type Result<T> = core::result::Result<T, Error>;
