//! Library side of the `srd` command: problem files, commands and output
//! formatting.

pub mod commands;
pub mod error;
pub mod format;
pub mod problem;

pub use error::{CliError, CliResult};
pub use problem::{load_problem, parse_problem, GridSpec, LoadedProblem, Model, Problem, ProblemFile};
