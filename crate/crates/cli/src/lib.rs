//! Library side of the `probe` command-line tool.

pub mod checks;
pub mod commands;
pub mod config;
pub mod dataset;
