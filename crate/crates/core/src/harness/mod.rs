//! Experiment orchestration: configuration, multi-run sweeps, metrics,
//! table output, the kernel-count approximation demo and gradient checks.

mod approx;
mod check;
mod config;
mod emit;
mod experiment;
mod metrics;

pub use approx::{approx_benchmark, ApproxConfig, ApproxRow, ApproxTarget};
pub use check::{gradient_suite, GradCase};
pub use config::{parse_pairs, parse_steps, ExperimentOptions};
pub use emit::{
    emit, format_sci, render, to_csv, to_json, write_error_curve, write_loss_curve, RowRecord, CSV_HEADER,
    STD_CONVENTION,
};
pub use experiment::{
    resolve_reference, run_experiment, worker_pool, ExperimentOutput, OutputFormat, ReferenceSource, ResultRow,
    RunSpec, WORKERS_ENV,
};
pub use metrics::{error_order, mean, relative_error, sample_std};
