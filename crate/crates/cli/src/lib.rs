//! Library half of the `mesd` command-line tool: the run configuration
//! document and the subcommand implementations.

pub mod commands;
pub mod config;
