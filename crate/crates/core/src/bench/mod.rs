//! Simulation study: fit every family to sliced test functions on random
//! clustered designs and score the results.

mod config;
mod metrics;
mod runner;
mod summary;

pub use config::{EmpiricalSection, ExperimentConfig, FitSection, ModelKind, TestSetSection};
pub use metrics::{extract_tau_hat, positive_cone_gap, q_squared, rmse_corr};
pub use runner::{
    make_test_set, prepare_reference, read_records, run_experiment, run_to_dir, write_atomic, write_records,
    BenchRecord, Reference, Status, TestSet,
};
pub use summary::{median_of, quantile_sorted, summarize, write_summary, BoxStats, SummaryRow};
