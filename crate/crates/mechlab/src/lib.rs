//! Configuration files, JSON-lines and CSV reports, the parallel experiment
//! runner and the command implementations behind the `mechlab` binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod runner;
pub mod suite;
