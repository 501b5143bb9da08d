//! Experiment orchestration: configuration, evaluation runs, sweeps, the
//! placement and positioning studies, metrics and CSV/plot-script output.

mod config;
mod runner;
mod study;

pub use config::{parse_config_str, ConfigSource, ExperimentConfig, LogMode, SweepAxis};
pub use runner::{
    aggregate, bcd_convergence_report, emit_plot_scripts, evaluate_runs, obtain_policy,
    run_experiment, sweep_axis, train_policy, write_bcd_bench_csv, write_learning_curve_csv,
    write_retention_csv, write_runs_csv, write_summary_csv, write_vehicles_csv, Aggregate,
    BcdBenchRow, EvalOutput, ExperimentOutput, RunResult, TrainedPolicy,
};
pub use study::{placement_product, placement_study, positioning_study, RetentionRow};

use crate::agent::AgentError;
use crate::env::EnvError;
use crate::mobility::MobilityError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    ConfigErrors(Vec<String>),
    #[error("metric undefined: no departed vehicles")]
    EmptyMetric,
    #[error("metric undefined: all rates are zero")]
    DegenerateMetric,
    #[error("missing checkpoint for policy {0}; train first or pass a checkpoint path")]
    MissingCheckpoint(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Minimum of the departed vehicles' average rates, the run-level objective.
pub fn min_avg_bitrate(z_values: &[f64]) -> Result<f64, HarnessError> {
    z_values
        .iter()
        .copied()
        .min_by(|a, b| a.partial_cmp(b).expect("rates are finite"))
        .ok_or(HarnessError::EmptyMetric)
}

/// Jain's fairness index (sum z)^2 / (V * sum z^2), in (0, 1].
pub fn jain_index(z_values: &[f64]) -> Result<f64, HarnessError> {
    if z_values.is_empty() {
        return Err(HarnessError::EmptyMetric);
    }
    let sum: f64 = z_values.iter().sum();
    let sum_sq: f64 = z_values.iter().map(|z| z * z).sum();
    if sum_sq == 0.0 {
        return Err(HarnessError::DegenerateMetric);
    }
    Ok(sum * sum / (z_values.len() as f64 * sum_sq))
}
