//! Experiment orchestration: builds d(n) = p(n)*x(n) + noise at each SNR,
//! gates the canceller with SAD decisions, and reports LSD and misalignment
//! of the final filter.

mod config;
mod experiment;
mod report;

pub use config::{
    DetectorChoice, ExperimentConfig, InputSource, SadMode, DEFAULT_DURATION_S, DEFAULT_SAMPLE_RATE,
};
pub use experiment::{
    measurement_noise, run_experiment, Detection, Experiment, ExperimentResult, RowResult,
    RowStatus,
};
pub use report::{
    emit_prediction_trace, fmt_num, trajectory_file_name, write_outputs, write_results_csv,
    write_trajectory_csv, MANIFEST_FILE, RESULTS_FILE, TRACE_FILE,
};
