//! Command-line front end: scenario files, command dispatch and report files.

pub mod commands;
pub mod error;
pub mod scenario;

pub use commands::{
    analyze, compare, obd, run_dp, run_obd, run_rule, simulate, DpRun, Outputs, Strategy,
};
pub use error::{CliError, CliResult};
pub use scenario::{Overrides, Scenario};
