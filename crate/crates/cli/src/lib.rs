//! Library surface of the `vibci` binary: config schema, command
//! implementations, report schemas, and text rendering.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod render;
pub mod reports;
