//! Experiment orchestration: TOML configs, parallel run scheduling with
//! per-run seeds, CSV persistence and metric summaries.

pub mod config;
pub mod runner;
pub mod summary;

pub use config::{load_config, BudgetRule, ExperimentConfig};
pub use runner::{execute, jobs, run_experiment, run_jobs, run_seed, trajectory_path, ExperimentOutput, Job};
pub use summary::{load_groups, summarize, Group, Metric, SummaryOptions};
