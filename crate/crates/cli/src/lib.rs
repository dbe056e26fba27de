//! Scenario runner for the conjheat harness: TOML scenarios, named checks,
//! refinement studies, CSV/JSON reports and SVG plots.

pub mod checks;
pub mod config;
pub mod plot;
pub mod report;
pub mod runner;

pub use config::{ConfigError, ScenarioConfig};
pub use runner::{convergence_study, execute, run_scenario, study, RunOptions, StudyReport};
