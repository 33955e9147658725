//! Replicated experiment harness for `rucb-core`.

pub mod commands;
pub mod error;
pub mod harness;
pub mod output;
pub mod spec;

pub use commands::{
    cmd_gen_pool, cmd_match_budget, cmd_profile, cmd_run, cmd_sweep_c, cmd_sweep_rate, BatchSummary, COptimum,
    ProfileReport, RunReport,
};
pub use error::{BenchError, Result};
pub use harness::{Batch, Experiment, Replicate, THREADS_ENV};
pub use spec::{log_grid, EnvSource, ExperimentSpec};
