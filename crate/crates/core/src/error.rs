use thiserror::Error;

/// Errors raised by the solvers and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{function} is undefined for argument {value} (must be > 0)")]
    Domain { function: &'static str, value: f64 },

    #[error("height fell to {h:e} at r = {r} (floor {floor:e}); tolerances are too loose")]
    PositivityBreach { r: f64, h: f64, floor: f64 },

    #[error("step size underflow at x = {x} (step {step:e})")]
    StepFailure { x: f64, step: f64 },

    #[error("r = {r} is outside the trajectory range [{lo}, {hi}]")]
    OutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("Picard iteration does not contract on delta = {delta:e}: {reason}")]
    NoContraction { delta: f64, reason: String },

    #[error("Picard iteration did not converge after {iterations} iterations (last update {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error("only {found} critical points found, {requested} requested")]
    InsufficientRange { found: usize, requested: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
