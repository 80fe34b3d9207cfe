use thiserror::Error;

use crate::game::State;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("restart depth s={s} exceeds the capitulation gap g={g}")]
    RestartAboveGap { g: u32, s: u32 },

    #[error("policy violations: {0}")]
    InvalidPolicies(String),

    #[error("state {state} would leave the truncation depth {depth}")]
    EscapesDepth { state: State, depth: u32 },

    #[error("state {0} is not part of the chain")]
    UnknownState(State),

    #[error("linear solve residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("mixing budget of {budget} steps exceeded (distance still {distance:e})")]
    BudgetExceeded { budget: u64, distance: f64 },

    #[error("round decomposition needs player 2 to play Frontier")]
    RoundDecompositionUnavailable,

    #[error("trig evaluation {value} is {distance:e} away from an integer at {bits} bits")]
    PrecisionLoss {
        value: f64,
        distance: f64,
        bits: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("total validated block rate must be positive, got {0}")]
    DegenerateRate(f64),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(p1: f64) -> Result<()> {
    if p1.is_finite() && p1 > 0.0 && p1 < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "win probability must lie in (0, 1), got {p1}"
        )))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
