//! Config-driven experiments: repeated trials, trace export, aggregation and plots.

mod aggregate;
mod config;
mod plot;
mod run;

pub use aggregate::{aggregate, mean_two_std, read_aggregate, write_aggregate, AggregateRow, AGGREGATE_HEADER};
pub use config::{
    Algorithm, BudgetSection, DataSection, ExperimentConfig, ExperimentSection, Law,
    OptimizerSection, ProfileSection, ScheduleKind, ScheduleSection, StepKind, OUTPUT_ROOT_ENV,
};
pub use plot::{emit_plot, render_plot};
pub use run::{
    exit_code, prepare, run_experiment, trace_file_name, ExperimentSummary, Prepared, TrialSummary,
};
