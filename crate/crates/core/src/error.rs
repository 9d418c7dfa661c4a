use thiserror::Error;

/// Everything that can go wrong inside the market engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("probability vector needs at least 2 outcomes, got {0}")]
    TooFewOutcomes(usize),
    #[error("invalid probability entry {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("probability weights are all zero")]
    AllZero,
    #[error("non-finite or out-of-range input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("degenerate market: clearing denominator {0} is not positive")]
    DegenerateMarket(f64),
    #[error("market clearing did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("outcome index {index} out of range for {outcomes} outcomes")]
    OutcomeOutOfRange { index: usize, outcomes: usize },
    #[error("game is already decided at {score_a}-{score_b}")]
    GameOver { score_a: u32, score_b: u32 },
    #[error("empty forecast trace")]
    EmptyTrace,
}

pub type Result<T> = std::result::Result<T, MarketError>;
