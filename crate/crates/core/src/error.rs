use thiserror::Error;

use crate::solver::TopiaryResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping of errors, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or inconsistent input.
    Input,
    /// Numerical trouble: non-PSD kernels, singular systems, domain violations.
    Numerical,
    /// An iterative method stopped without meeting its tolerance.
    NonConvergence,
    /// An internal invariant broke. Always a bug.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("gram matrix is not positive semidefinite: min eigenvalue {eigenvalue:e} < -{threshold:e}")]
    NonPsd { eigenvalue: f64, threshold: f64 },

    #[error("point outside kernel domain: {0}")]
    Domain(String),

    #[error("step parameter t = {0} outside [0, 1]")]
    TOutOfRange(f64),

    #[error("portfolio has zero norm; beta is undefined")]
    ZeroPortfolio,

    #[error("degenerate ascent direction at point {point}: ||k_x - mu||^2 = {dist_sq:e}")]
    DegenerateDirection { point: usize, dist_sq: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("no convergence after {iterations} iterations (score {score:e})")]
    MaxIterExceeded {
        iterations: usize,
        score: f64,
        partial: Box<TopiaryResult>,
    },

    #[error("set is not prunable: augmented system singular (pivot ratio {pivot_ratio:e})")]
    NotPrunable { pivot_ratio: f64 },

    #[error("exchange made no progress at point {point} (step {step:e})")]
    NoProgress { point: usize, step: f64 },

    #[error("exchange cycle detected after {iterations} exchanges")]
    CycleDetected {
        iterations: usize,
        partial: Box<TopiaryResult>,
    },

    #[error("point set is not a topiaric index (max |margin| {max_abs_margin:e})")]
    NotAnIndex { max_abs_margin: f64 },

    #[error("no removable point found in a topiaric index of size {size}; margins {margins:?}")]
    AccessibilityFailure { size: usize, margins: Vec<(usize, f64)> },

    #[error("problem too large: {size} points exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("base point {0} is not in the topiaric index")]
    BaseNotInIndex(usize),

    #[error("an oracle objective is required")]
    RequiresOracle,

    #[error("returns table needs at least 2 rows, got {0}")]
    TooFewRows(usize),

    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },

    #[error("non-numeric cell at row {row}, column {column}: {text:?}")]
    NonNumericCell { row: usize, column: usize, text: String },

    #[error("reference point {0} is not in the ground set")]
    UnknownReferencePoint(usize),

    #[error("mask has no obstacle cells")]
    EmptyMask,

    #[error("path start lies inside an obstacle cell")]
    StartInsideObstacle,

    #[error("kernel is not analytic; harmonic conjugate undefined")]
    KernelNotAnalytic,

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidInput(_) | TOutOfRange(_) | Precondition(_) | NotAnIndex { .. } | TooLarge { .. }
            | BaseNotInIndex(_) | RequiresOracle | TooFewRows(_) | RaggedRow { .. }
            | NonNumericCell { .. } | UnknownReferencePoint(_) | EmptyMask
            | StartInsideObstacle | KernelNotAnalytic | Io(_) | Json(_) | Csv(_) => ErrorClass::Input,
            NonPsd { .. } | Domain(_) | ZeroPortfolio | DegenerateDirection { .. }
            | NotPrunable { .. } | AccessibilityFailure { .. } => ErrorClass::Numerical,
            MaxIterExceeded { .. } | CycleDetected { .. } | NoProgress { .. } => {
                ErrorClass::NonConvergence
            }
            Invariant(_) => ErrorClass::Internal,
        }
    }
}
