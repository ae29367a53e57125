//! Configuration, file formats and the experiment runner for the `cbbsd`
//! command-line tool.
//!
//! - [`schema`]: JSON instance documents, including gadget specs.
//! - [`config`]: experiment configs, command-line overrides, validation.
//! - [`trace_csv`]: the per-round trace CSV.
//! - [`report`]: summary and baseline JSON documents.
//! - [`experiment`]: parallel Monte-Carlo runs, baselines and output files.

pub mod config;
pub mod experiment;
pub mod report;
pub mod schema;
pub mod trace_csv;

pub use config::{parse_config, parse_config_with, ConfigError, ExperimentConfig, Overrides};
pub use experiment::{run_experiment, RunError};
