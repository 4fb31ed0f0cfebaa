//! Scenario loading, property suites and reports for `cat0-fubini`.
//!
//! The `cat0fubini` binary is a thin wrapper over [`commands`]; the same
//! entry points drive the acceptance tests.

pub mod commands;
pub mod report;
pub mod scenario;
pub mod suites;

pub use report::{Report, SuiteReport};
pub use scenario::{Scenario, ScenarioError, SuiteSpec};
pub use suites::SuiteName;
