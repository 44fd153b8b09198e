//! Experiment runner, summary tables and the `lint` command line.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod report;
