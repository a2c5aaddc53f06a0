//! Scenario loading and execution behind the `vdist` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod run;
pub mod scenario;

pub use run::{run_check, run_scenario, RunError, RunSummary};
pub use scenario::{builtin, parse_scenario, ConfigError, Overrides, Scenario, BUILTINS};
