//! Experiment configuration, ensemble execution and report output.

pub mod config;
pub mod experiment;
pub mod report;
