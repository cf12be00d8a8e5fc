//! Experiment harness: run logs, the grid runner, and rank reports.

pub mod grid;
pub mod report;
pub mod runlog;

pub use grid::{cell_path, ensure_prior, run_grid, GridOutcome, GridSpec, PriorCondition, DEFAULT_PRIOR_SEED};
pub use report::{best_value_trace, hv_trace, rank_report, Grouping, RankReport, RankRow};
pub use runlog::{DefaultsSnapshot, RunHeader, RunLog, Trial, TrialStatus};
