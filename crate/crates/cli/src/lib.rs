//! Command-line front end: JSON model files in, deterministic JSON reports out.
//!
//! Exit status: 0 success, 2 malformed input or unknown label, 3 empty credal
//! set, 4 budget hit or indeterminate verdict (report still printed), 5 an
//! iteration that failed to converge, 1 internal error.

pub mod commands;
pub mod error;
pub mod input;
pub mod report;

pub use commands::{
    cmd_classify, cmd_convergence, cmd_evolve, cmd_invariant, cmd_permanent, cmd_report,
    cmd_validate, run, Command, Options, Output,
};
pub use error::{CliError, CliResult};

/// Environment variable naming a JSON config file layered under the flags.
pub const CONFIG_ENV: &str = "IMC_CONFIG";
