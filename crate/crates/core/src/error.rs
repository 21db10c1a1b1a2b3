use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("epsilon {0} outside (0, 1]")]
    EpsilonOutOfRange(f64),

    #[error("epsilon {eps} is under-resolved, the grid requires epsilon >= 2h = {min}")]
    UnderResolved { eps: f64, min: f64 },

    #[error("unknown mollifier variant `{0}`")]
    UnknownMollifier(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("invalid initial data: {0}")]
    InvalidData(String),

    #[error("invalid stepper configuration: {0}")]
    InvalidStepper(String),

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("dense reference limited to {max} unknowns, got {got}")]
    DenseTooLarge { max: usize, got: usize },

    #[error("refined problem needs {needed} nodes, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
