use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::estimators::{Algorithm, OffsetSet, DEFAULT_EPSILON};
use crate::noise::{NoiseModel, ProbabilityPrior};
use crate::scheduler::NuSearch;

/// How random input pairs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorMode {
    /// Independent Haar-random unit vectors.
    #[default]
    Haar,
    /// `θ` uniform on `[0, π/2]`, then a pair with `x·y = sin θ`.
    UniformTheta,
}

impl VectorMode {
    /// Distribution this mode induces on `p = sin²θ`.
    pub fn prior(&self) -> ProbabilityPrior {
        match self {
            VectorMode::Haar => ProbabilityPrior::Haar,
            VectorMode::UniformTheta => ProbabilityPrior::UniformTheta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MleSettings {
    /// Use the depolarizing likelihood instead of `sin²/cos²`.
    pub noise_aware: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrtSettings {
    pub offsets: OffsetSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridSettings {
    /// Threshold multiplier used when `tune_beta` is off.
    pub beta: f64,
    pub calibration_trials: usize,
    /// Pick the multiplier per depth from `beta_grid` on calibration data.
    pub tune_beta: bool,
    pub beta_grid: Vec<f64>,
    /// Read the calibration from this file instead of computing it.
    pub calibration_file: Option<PathBuf>,
}

impl Default for HybridSettings {
    fn default() -> Self {
        Self {
            beta: 1.0,
            calibration_trials: 200,
            tune_beta: false,
            beta_grid: vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 32.0],
            calibration_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerLawSettings {
    pub target_errors: Vec<f64>,
    #[serde(flatten)]
    pub search: NuSearchKeys,
}

/// Flat `nu_min` / `nu_max` / `nu_resolution` keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NuSearchKeys {
    pub nu_min: f64,
    pub nu_max: f64,
    pub nu_resolution: f64,
}

impl Default for NuSearchKeys {
    fn default() -> Self {
        let s = NuSearch::default();
        Self { nu_min: s.min, nu_max: s.max, nu_resolution: s.resolution }
    }
}

impl From<NuSearchKeys> for NuSearch {
    fn from(k: NuSearchKeys) -> Self {
        NuSearch { min: k.nu_min, max: k.nu_max, resolution: k.nu_resolution }
    }
}

impl Default for PowerLawSettings {
    fn default() -> Self {
        Self {
            target_errors: vec![0.05, 0.03, 0.02, 0.015, 0.01, 0.007, 0.005, 0.004, 0.003, 0.0025],
            search: NuSearchKeys::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramSettings {
    pub bins: usize,
    pub max_error: f64,
}

impl Default for HistogramSettings {
    fn default() -> Self {
        Self { bins: 25, max_error: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub dir: PathBuf,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { dir: PathBuf::from("results") }
    }
}

/// Everything one experiment run needs. Loaded from TOML; every key is
/// optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_trials: usize,
    pub n_shots: u64,
    pub max_depth: usize,
    pub epsilon: f64,
    pub algorithms: Vec<Algorithm>,
    pub vector_mode: VectorMode,
    /// Defaults to [`NoiseModel::default_linear`] over `0..=max_depth`.
    pub noise: Option<NoiseModel>,
    /// Noise model the noise-aware likelihoods and the power-law planner
    /// assume. Defaults to the simulated model.
    pub estimator_noise: Option<NoiseModel>,
    pub mle: MleSettings,
    pub crt: CrtSettings,
    pub hybrid: HybridSettings,
    pub powerlaw: PowerLawSettings,
    pub histogram: HistogramSettings,
    #[serde(skip_serializing)]
    pub output: OutputSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2021,
            n_trials: 50,
            n_shots: 500,
            max_depth: 7,
            epsilon: DEFAULT_EPSILON,
            algorithms: Algorithm::ALL.to_vec(),
            vector_mode: VectorMode::default(),
            noise: None,
            estimator_noise: None,
            mle: MleSettings::default(),
            crt: CrtSettings::default(),
            hybrid: HybridSettings::default(),
            powerlaw: PowerLawSettings::default(),
            histogram: HistogramSettings::default(),
            output: OutputSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise.clone().unwrap_or_else(|| NoiseModel::default_linear(self.max_depth))
    }

    pub fn estimator_noise_model(&self) -> NoiseModel {
        self.estimator_noise.clone().unwrap_or_else(|| self.noise_model())
    }

    /// Copy with the noise models filled in, as recorded in run manifests.
    pub fn resolved(&self) -> Self {
        Self { noise: Some(self.noise_model()), estimator_noise: Some(self.estimator_noise_model()), ..self.clone() }
    }

    pub fn has(&self, algorithm: Algorithm) -> bool {
        self.algorithms.contains(&algorithm)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.n_trials == 0 {
            return fail("n_trials must be positive".into());
        }
        if self.n_shots == 0 {
            return fail("n_shots must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon {} must lie in (0, 1)", self.epsilon));
        }
        for (name, model) in [("noise", self.noise_model()), ("estimator_noise", self.estimator_noise_model())] {
            if model.max_depth() < self.max_depth {
                return fail(format!("{name} covers depths 0..={}, need 0..={}", model.max_depth(), self.max_depth));
            }
        }
        if self.has(Algorithm::Hybrid) && self.hybrid.calibration_trials == 0 && self.hybrid.calibration_file.is_none()
        {
            return fail("hybrid needs calibration_trials >= 1 or a calibration_file".into());
        }
        if self.hybrid.tune_beta && self.hybrid.beta_grid.is_empty() {
            return fail("beta_grid is empty".into());
        }
        if self.powerlaw.target_errors.iter().any(|e| e.is_nan() || *e <= 0.0) {
            return fail("power-law target errors must be positive".into());
        }
        if self.histogram.bins == 0 || self.histogram.max_error.is_nan() || self.histogram.max_error <= 0.0 {
            return fail("histogram needs bins >= 1 and max_error > 0".into());
        }
        Ok(())
    }
}
