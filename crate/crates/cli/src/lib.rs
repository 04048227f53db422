//! Experiment driver library behind the `dicke-sim` binary: configuration,
//! sweep runners, line fits and CSV/JSON output.

pub mod config;
pub mod fit;
pub mod output;
pub mod runners;
