use thiserror::Error;

/// Flags raised by the brute-force grid estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFlag {
    /// No grid point of the target set lies in the box.
    EmptyTarget,
    /// Fewer than two distinct cells of the color were found in the box.
    NoPair,
    /// The cell has no grid point.
    EmptyCell,
    /// The grid would exceed the point budget.
    TooLarge,
}

impl std::fmt::Display for GridFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GridFlag::EmptyTarget => "target set has no grid point in the box",
            GridFlag::NoPair => "fewer than two cells of the color in the box",
            GridFlag::EmptyCell => "cell has no grid point",
            GridFlag::TooLarge => "grid exceeds the point budget",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid partition spec: {0}")]
    InvalidSpec(String),
    #[error("integer {code} does not encode a cell of color {color}")]
    NotACell { code: String, color: usize },
    #[error("measurement budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },
    #[error("float-mode cell index decode failed: {0}")]
    PrecisionExceeded(String),
    #[error("measurement outcome inconsistent with the protocol: {0}")]
    InconsistentOutcome(String),
    #[error("replayed query {index} differs from the recorded one")]
    ReplayDiverged { index: usize },
    #[error("point lies outside every covering set")]
    OutsideCovering,
    #[error("s-number index {n} needs more than {d} weights")]
    Truncation { n: usize, d: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("grid estimator: {0}")]
    Grid(GridFlag),
}

pub type Result<T> = std::result::Result<T, Error>;
