//! Configuration, file formats and command orchestration on top of
//! `waveguide-core`.

pub mod commands;
pub mod config;
pub mod io;

pub use commands::{run, RunError};
pub use config::{load, parse, Command, RunConfig};
