use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution error: {msg} (need at least {needed} nodes)")]
    Resolution { msg: String, needed: usize },
    #[error("construction violation: {0}")]
    ConstructionViolation(String),
    #[error("evaluation on branch cut at z = {re} + {im}i")]
    OnCut { re: f64, im: f64 },
    #[error("boundary extrapolation did not converge at x = {x}: spread {spread:e}")]
    BoundaryConvergence { x: f64, spread: f64 },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("memory budget exceeded: {rows}x{cols}, try decimating by {suggest}")]
    Memory { rows: usize, cols: usize, suggest: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
