//! The data world: budgets, block partitions, problem instances, and the
//! ledger that enforces the per-example attribute budget.

mod budget;
mod dataset;
mod env;
mod instance;
mod partition;

pub use budget::Budget;
pub use dataset::{load_csv_dataset, read_csv_rows, split_train_test, Dataset, Rows, TargetColumn};
pub use env::{
    draw_example, observe, trial_rng, Environment, Example, ExampleSource, ObservationEvent,
    ObservationLedger, TrialRng, TEST_STREAM, TRAIN_STREAM,
};
pub use instance::{make_synthetic_d500, Covariance, FeatureLaw, ProblemInstance, SyntheticSpec};
pub use partition::{make_block_partition, BlockPartition};
