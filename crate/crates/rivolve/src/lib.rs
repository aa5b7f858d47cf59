//! Configuration, file formats and command implementations for the `rivolve` binary.

pub mod commands;
pub mod config;
pub mod io;
pub mod report;

pub use commands::{jumpcost, solve, sweep, verify, Axis, Outcome};
pub use config::RunConfig;
