//! Configuration, persistence and concurrency around the `plateflow` core.
//!
//! A run merges a TOML scenario with command-line flags, executes one
//! experiment and leaves a self-describing directory: the resolved
//! `scenario.toml`, CSV/JSON artifacts and `manifest.json`.

pub mod config;
pub mod error;
pub mod ops;
pub mod run;

pub use config::{Experiment, ScenarioConfig};
pub use error::{CliError, Result};
pub use run::{execute, prepare, Invocation, RunManifest};
