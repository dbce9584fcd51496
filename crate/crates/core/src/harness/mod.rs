//! Experiment plumbing: model presets, sweep configuration and execution,
//! result tables and trajectory files.

pub mod config;
pub mod presets;
pub mod sweep;
pub mod trajfile;

pub use config::{DeltaRule, DtRule, Method, SweepConfig};
pub use presets::ModelFamily;
pub use sweep::{replicate_stream, run_sweep, run_sweep_to_file, write_results, ResultRow};
