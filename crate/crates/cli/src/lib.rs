//! Experiment runner: configuration, orchestration of outage timelines over
//! drops and weight grids, and the trace/allocation/manifest artifacts.

pub mod config;
pub mod error;
pub mod experiment;
pub mod trace_io;
pub mod validate;

pub use config::{ExperimentConfig, Preset};
pub use error::CliError;
pub use experiment::{run_experiment, Manifest, RunEntry};
pub use trace_io::{read_trace, write_trace, TraceTable};
