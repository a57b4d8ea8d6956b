//! Scenario files, reports and command implementations behind the
//! `packpair` binary.

pub mod commands;
pub mod report;
pub mod scenario;

pub use commands::{CmdOutput, EXIT_INPUT, EXIT_OK, EXIT_TASK_FAILURE, EXIT_UNPLANNABLE};
pub use scenario::{InputError, Scenario, HEADER};
