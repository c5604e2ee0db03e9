//! Scenario runner: parses scenario files, orchestrates the solve → detect →
//! integrate → analyze pipeline and writes a run report.

pub mod pipeline;
pub mod scenario;

pub use pipeline::{run_scenario, RunReport};
pub use scenario::{Scenario, Stage};
