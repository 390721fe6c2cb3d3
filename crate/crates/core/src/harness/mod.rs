//! Experiment orchestration: configuration, training loop, evaluation and artifacts.

mod config;
mod inspect;
mod metrics;
mod run;

pub use config::{load_config, preset, resolve_config, ExperimentConfig, MemoryMode, PRESETS};
pub use inspect::inspect_bank;
pub use metrics::{add_pair, evaluate, write_metrics_csv, Assignment, Evaluator, MetricsRow, METRICS_HEADER};
pub use run::{ablation_configs, domain_spec, evaluate_artifacts, run_ablation, run_training, seeds, TrainingOutcome};
