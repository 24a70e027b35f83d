//! Config-driven runner for the verification experiments of `mfc-core`.
//!
//! `mfc run <config> [--outdir DIR] [--dump-paths]` parses a sectioned
//! `key = value` file (see [`config`]), runs exactly one experiment and
//! writes `report.csv`, `summary.txt` and `plot_*.csv` to the output
//! directory. Exit codes: 0 when every case passes, 2 when a tolerance
//! fails, 1 on any execution error. `MFC_WORKERS` sets the thread count and
//! never changes the results.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse_config, parse_str, ConfigError, ExperimentConfig, RunConfig};
pub use runner::{execute, run, Overrides, EXIT_ERROR, EXIT_PASS, EXIT_TOLERANCE};
