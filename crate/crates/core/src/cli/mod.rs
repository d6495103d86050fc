//! Command implementations behind the `robustfolio` binary.
//!
//! Each `cmd_*` function does the work of one subcommand and writes its
//! artifacts; argument parsing lives in `main.rs`.

mod commands;
mod config;

pub use commands::{cmd_compare, cmd_frontier, cmd_ingest, cmd_simulate, cmd_summary, IngestOptions};
pub use config::{DataSource, RunConfig, RunConfigFile, SameMarker, SampleCount, SimulationSpec};
