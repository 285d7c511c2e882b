//! Scenario runner around the `nlpot` library: configuration parsing, file
//! formats, report emission, and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod formats;
pub mod report;
pub mod scenarios;
