//! Metrics, experiment orchestration and result emission.

pub mod emit;
pub mod experiment;
pub mod metrics;

pub use experiment::{run_algorithm, run_experiment, Algorithm, ExperimentGrid, GridEntry, RunSettings};
pub use metrics::{compute_inf, run_metrics, FeasibilityStatus, MetricsRecord, RunMetrics, INF_SENTINEL};
