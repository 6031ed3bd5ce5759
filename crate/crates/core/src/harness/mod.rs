//! Seeded batch experiments: manifests, parallel execution and export.

pub mod analyze;
pub mod config;
pub mod export;
pub mod runner;

pub use analyze::{analyze_prices, read_price_csv, PriceTable, SeriesAnalysis};
pub use config::{load_config, parse_config, set_parameter, AnalysisConfig, ExperimentConfig, OutputConfig, Sweep};
pub use export::{export, summary_json, write_series_csv, write_trials_csv};
pub use runner::{baseline_seed, corrupted_seed, run_experiment, trial_seed, Aggregate, GroupRecord, RunRecord, TrialRecord, THREADS_ENV};
