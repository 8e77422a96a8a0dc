//! Grid-search fine-tuning protocol: grid enumeration, early stopping,
//! validation-based selection, a resumable journal and result tables.

mod config;
mod journal;
mod probe;
mod report;
mod trainer;
mod trial;

pub use config::{enumerate_grid, GridSpec, Metric, Task, TrialConfig};
pub use journal::{read_journal, run_grid, GridOptions, GridOutcome, Journal};
pub use probe::{ProbeState, ProbeTrainer};
pub use report::{
    emit_report, format_hmm, hyperparameter_table, track_wall_time, wall_time_table, ModelResults, ReportFormat, TaskResult,
    WallTimeSummary,
};
pub use trainer::{EpochContext, MockState, MockTrainer, Split, Splits, TaskData, Trainer};
pub use trial::{run_trial, select_best, StopReason, TrialRecord};
