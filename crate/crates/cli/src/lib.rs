//! Configuration loading, orchestration and output for the `smallnoise`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod io;

pub use commands::{run_command, Command, VERSION_TAG};
pub use config::{parse_config, ExperimentConfig};
