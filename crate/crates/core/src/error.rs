use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FifError {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("contractivity violated: sup|S| = {sup_abs} >= 1")]
    ContractivityViolation { sup_abs: f64 },

    #[error("required condition {condition} does not hold")]
    ConditionNotMet { condition: &'static str },

    #[error("resource limit: {what}")]
    ResourceLimit {
        what: String,
        /// Bracket width reached before the limit, when the limit stopped a refinement loop.
        achieved_width: Option<f64>,
    },

    #[error("power iteration did not converge after {iterations} iterations (gap {gap:e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("insufficient resolution: grid level {grid_level} cannot resolve level {level}")]
    InsufficientResolution { grid_level: u32, level: u32 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, FifError>;
