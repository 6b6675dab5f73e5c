//! Command-line front end: argument definitions, subcommand implementations
//! and run manifests. The `eitsim` binary is a thin wrapper around these.

pub mod args;
pub mod commands;
pub mod manifest;
