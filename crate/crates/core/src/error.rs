use thiserror::Error;

/// Errors raised by model construction and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state space must contain at least one state")]
    EmptyStateSpace,

    #[error("duplicate state label `{0}`")]
    DuplicateState(String),

    #[error("state space has {0} states; at most {max} are supported", max = crate::model::MAX_STATES)]
    TooManyStates(usize),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in gamble")]
    NonFinite,

    #[error("invalid gamble interval: lower exceeds upper at state {0}")]
    InvalidInterval(usize),

    #[error("invalid credal row: {0}")]
    InvalidRow(String),

    #[error("empty credal set: {0}")]
    EmptyCredalSet(String),

    #[error("invalid expectation functional: {0}")]
    InvalidHandle(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("vertex enumeration produced more than {cap} extreme points")]
    VertexBudgetExceeded { cap: usize },

    #[error("{states} states exceed the subset-lattice budget of {cap}")]
    StateBudgetExceeded { states: usize, cap: usize },

    #[error("operator power {r} exceeds the cap of {cap}")]
    PowerCapExceeded { r: usize, cap: usize },

    #[error("no regularity step r <= {cap} found for the class")]
    RegularityCapExceeded { cap: usize },

    #[error("restricted operator keeps no transition for state {0}")]
    EmptyRestriction(usize),

    #[error("set is not absorbing")]
    AbsorbingViolation,

    #[error("iteration did not converge after {iterations} steps (values oscillate within [{lower}, {upper}])")]
    NonConvergent {
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    #[error("monotone iteration violated at step {step}: {previous} -> {current}")]
    MonotonicityViolation {
        step: usize,
        previous: f64,
        current: f64,
    },

    #[error("operation requires an explicit expectation functional, not an iterated limit")]
    NotExplicit,

    #[error("operation requires a precise transition operator")]
    NotPrecise,

    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
