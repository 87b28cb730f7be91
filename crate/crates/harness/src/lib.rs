//! Experiment driver for the `lod-core` solver: configuration files, sweeps,
//! CSV tables, SVG plots and the `lod` command line.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod svg;

pub use config::{CoefficientSpec, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use experiment::{read_csv, run_experiment, write_csv, ResultRow};
