//! Experiment driver: random inputs, trial execution, hybrid calibration,
//! depolarizing fits, aggregation and file output.

mod calibrate;
mod config;
mod experiment;
mod fit;
mod report;
mod stats;
mod sweep;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub use calibrate::{calibrate_hybrid, HybridEntry, HybridTable};
pub use config::{
    CrtSettings, ExperimentConfig, HistogramSettings, HybridSettings, MleSettings, NuSearchKeys, OutputSettings,
    PowerLawSettings, VectorMode,
};
pub use experiment::{
    run_experiment, run_trial, sample_vector_pair, simulate_pool, training_samples, vector_pair_with_angle,
    EstimateRecord, ExperimentRun, PowerLawPlan, TrialFailure, TrialPlan, TrialResult, VectorPair,
};
pub use fit::{fit_depolarizing, FitError, FitSample};
pub use report::{
    aggregate, crt_histogram, emit, trial_rows, AggregateRow, HistogramRow, Manifest, OutputFiles, TrialRow,
    ORACLE_CALL_CONVENTION,
};
pub use stats::{resource_table, ResourceRow};
pub use sweep::{run_sweep, write_sweep, SweepParam, SweepRow};

use crate::circuit::CircuitError;
use crate::estimators::EstimatorError;
use crate::noise::NoiseError;
use crate::scheduler::SchedulerError;
use crate::simulator::SimError;

/// rng stream offsets, kept apart from per-trial streams `0..n_trials`.
pub const CALIBRATION_STREAM: u64 = 1 << 62;
pub const TRAINING_STREAM: u64 = 1 << 60;

/// Independent ChaCha stream `stream` under master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Io { .. } => "io",
            HarnessError::Csv(_) => "csv",
            HarnessError::Json(_) => "json",
            HarnessError::Circuit(_) => "circuit",
            HarnessError::Simulation(_) => "simulation",
            HarnessError::Noise(_) => "noise",
            HarnessError::Estimator(_) => "estimator",
            HarnessError::Scheduler(_) => "scheduler",
            HarnessError::Fit(_) => "fit",
        }
    }

    /// Machine-readable form for error output.
    pub fn record(&self) -> ErrorRecord {
        ErrorRecord { error: self.kind(), message: self.to_string() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
}
