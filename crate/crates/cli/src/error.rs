use imc_core::Error;
use thiserror::Error as ThisError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_EMPTY_CREDAL: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;
pub const EXIT_NON_CONVERGENT: i32 = 5;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("row `{row}`: {source}")]
    Row {
        row: String,
        #[source]
        source: Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: Error,
    },
}

impl CliError {
    pub fn core(context: impl Into<String>, source: Error) -> Self {
        Self::Core { context: context.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Parse(_) => EXIT_DATA,
            Self::Row { source, .. } | Self::Core { source, .. } => exit_code(source),
        }
    }
}

/// Exit status for a core error.
pub fn exit_code(e: &Error) -> i32 {
    use Error::*;
    match e {
        EmptyStateSpace
        | DuplicateState(_)
        | TooManyStates(_)
        | UnknownState(_)
        | DimensionMismatch { .. }
        | NonFinite
        | InvalidInterval(_)
        | InvalidRow(_)
        | InvalidHandle(_)
        | InvalidConfig(_) => EXIT_DATA,
        EmptyCredalSet(_) => EXIT_EMPTY_CREDAL,
        VertexBudgetExceeded { .. }
        | StateBudgetExceeded { .. }
        | PowerCapExceeded { .. }
        | RegularityCapExceeded { .. }
        | BudgetExceeded(_) => EXIT_BUDGET,
        NonConvergent { .. } | MonotonicityViolation { .. } => EXIT_NON_CONVERGENT,
        EmptyRestriction(_) | AbsorbingViolation | NotExplicit | NotPrecise | Invariant(_) => {
            EXIT_INTERNAL
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
