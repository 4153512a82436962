//! Scenario runner: JSON configs in, `metadata.json` plus CSV tables out.

pub mod artifact;
pub mod config;
pub mod error;
pub mod scenarios;
pub mod sweep;

pub use artifact::{output_root, Assertions, RunArtifact, Summary, Table, OUTPUT_ENV};
pub use config::{Params, ScenarioConfig, ScenarioKind};
pub use error::{CliError, Result};
pub use scenarios::run_scenario;
pub use sweep::{sweep, Axis, SweepResult};
