use thiserror::Error;

/// Errors raised by the operator, solver and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WsldError {
    #[error("fractional order {0} is outside the open interval (1, 2)")]
    InvalidOrder(f64),

    #[error("shift tuple must hold 1, 2, 4 or 8 integers, got {0}")]
    InvalidTupleLength(usize),

    #[error("degenerate shift tuple: {0}")]
    DegenerateTuple(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("power {power} is below ceil(alpha) = {min}; the derivative is not classical")]
    UnsupportedPower { power: u32, min: u32 },

    #[error("argument {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("no closed-form generating function for tuple {0}")]
    UnsupportedTuple(String),

    #[error("singular linear system (zero pivot in column {0})")]
    SingularSystem(usize),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, WsldError>;
