//! Solve logs, metrics, reports and the experiment runner.

pub mod experiment;
pub mod log;
pub mod metrics;
pub mod report;

pub use experiment::{run_experiment, run_instances, ExperimentOptions, ExperimentReport, RunFailure};
pub use log::{LogEvent, RunHeader, RunSummary, SolveLog};
pub use metrics::{
    classify_solves, hit_quality, ml_metrics, oracle_bound, pd_integral, performance_profile, replay, shifted_geom_mean,
    Breakdown, MlMetrics, OracleBound, ProfilePoint,
};
pub use report::{report_dir, write_report, Report, RunRow};
