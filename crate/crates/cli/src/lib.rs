//! Config parsing, experiment dispatch and result serialization for the
//! `polariton-bh` command.

pub mod config;
pub mod output;
pub mod run;

pub use config::{
    parse_config, parse_config_with, parse_graph, ExperimentConfig, ExperimentKind, OutputFormat,
    Preset,
};
pub use output::{read_csv, series_table, write_series, write_table, Table};
pub use run::{run_experiment, scan_grid, RunOutcome, THREADS_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] polariton_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON output: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Inconsistent(String),
}
