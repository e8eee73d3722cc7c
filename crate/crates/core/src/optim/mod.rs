//! Training loops, batch schedules and parameter diagnostics.

mod diagnostics;
mod profile;
mod schedule;
mod solvers;
mod trace;

pub use diagnostics::{
    batch_lower_bound, contraction_diagnostics, sparsity_ratio_bound, validate_parameters,
    ConstraintCheck, ConstraintReport, Contraction,
};
pub use profile::SmoothnessProfile;
pub use schedule::{
    hybrid_inner_length, hybrid_stage_delta, hybrid_stage_gap, theory_batch_size, theory_branches,
    BatchSchedule, TheoryBound, TheoryBranches, TheoryInputs,
};
pub use solvers::{
    run_exploitation, run_exploration, run_hybrid, run_naive_exploration, HybridConfig, StepSize,
};
pub use trace::{Recorder, RunTrace, Stage, StageBoundary, TraceRecord, TRACE_HEADER};
