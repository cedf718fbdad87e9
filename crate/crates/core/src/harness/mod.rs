//! Scenario configuration, trace files, batch runs and report output.

use std::path::PathBuf;

use thiserror::Error;

use crate::metrics::MetricError;
use crate::model::ModelError;
use crate::sim::{DuplicateFrame, SynthError};

mod config;
mod report;
mod scenario;
mod trace_io;

pub use config::ScenarioConfig;
pub use report::{
    emit_ablation, emit_report, parse_ablation_json, parse_report_json, render_ablation, round6,
    rounded, ReportFormat, REPORT_CSV_COLUMNS,
};
pub use scenario::{
    check_trace, run_ablation, run_scenario, AblationEntry, AblationRow, AblationRun,
    AblationTable, RunOutcome,
};
pub use trace_io::{load_trace, read_trace, write_trace};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Duplicate(#[from] DuplicateFrame),
    #[error("all {0} frames failed")]
    AllFramesFailed(usize),
    #[error("report: {0}")]
    Report(String),
}
