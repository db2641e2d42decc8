use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::calibrate::{calibrate_hybrid, HybridTable};
use super::config::{ExperimentConfig, VectorMode};
use super::fit::{fit_depolarizing, FitSample};
use super::{stream_rng, HarnessError, CALIBRATION_STREAM, TRAINING_STREAM};
use crate::circuit::build_iterated_circuit;
use crate::estimators::{
    crt_estimate, direct_estimate, hybrid_estimate, mle_estimate, powerlaw_estimate, Algorithm, Estimate, Schedule,
};
use crate::noise::{sample_noisy_counts, NoiseModel};
use crate::scheduler::{optimize_exponent, power_law_schedule, subsample_without_replacement, PowerLawConfig};
use crate::simulator::{run_statevector, DepthCounts};

/// Two real unit 4-vectors; the oracle angle is `asin |x·y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VectorPair {
    pub x: [f64; 4],
    pub y: [f64; 4],
}

impl VectorPair {
    pub fn inner(&self) -> f64 {
        dot(&self.x, &self.y)
    }

    pub fn theta(&self) -> f64 {
        self.inner().abs().min(1.0).asin()
    }
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn normalize(v: [f64; 4]) -> Option<[f64; 4]> {
    let n = dot(&v, &v).sqrt();
    (n > 1e-8).then(|| v.map(|c| c / n))
}

fn gaussian_unit<R: Rng + ?Sized>(rng: &mut R) -> [f64; 4] {
    loop {
        let v = [(); 4].map(|_| rng.sample::<f64, _>(StandardNormal));
        if let Some(u) = normalize(v) {
            return u;
        }
    }
}

pub fn sample_vector_pair<R: Rng + ?Sized>(rng: &mut R, mode: VectorMode) -> VectorPair {
    match mode {
        VectorMode::Haar => VectorPair { x: gaussian_unit(rng), y: gaussian_unit(rng) },
        VectorMode::UniformTheta => {
            let theta = rng.random::<f64>() * std::f64::consts::FRAC_PI_2;
            vector_pair_with_angle(theta, rng)
        }
    }
}

/// Random pair with `x·y = sin θ`.
pub fn vector_pair_with_angle<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> VectorPair {
    let x = gaussian_unit(rng);
    let u = loop {
        let w = gaussian_unit(rng);
        let along = dot(&w, &x);
        let perp = [0, 1, 2, 3].map(|i| w[i] - along * x[i]);
        if let Some(u) = normalize(perp) {
            break u;
        }
    };
    let (s, c) = theta.sin_cos();
    let y = normalize([0, 1, 2, 3].map(|i| s * x[i] + c * u[i])).expect("unit combination");
    VectorPair { x, y }
}

/// Noisy postselected shots at depths `0..=max_depth`, one circuit
/// simulation per depth.
pub fn simulate_pool<R: Rng + ?Sized>(
    pair: &VectorPair,
    max_depth: usize,
    shots: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<DepthCounts>, HarnessError> {
    (0..=max_depth)
        .map(|d| {
            let state = run_statevector(&build_iterated_circuit(&pair.x, &pair.y, d)?)?;
            Ok(sample_noisy_counts(state.good_probability(), d, shots, noise, rng)?)
        })
        .collect()
}

/// Exponent and schedule chosen for one power-law target error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawPlan {
    pub target_eps: f64,
    pub nu: Option<f64>,
    pub schedule: Option<Schedule>,
    pub error: Option<String>,
}

impl PowerLawPlan {
    pub fn tag(&self) -> String {
        format!("eps={}", self.target_eps)
    }
}

/// Per-experiment state shared by every trial.
#[derive(Debug, Clone)]
pub struct TrialPlan {
    pub config: ExperimentConfig,
    /// Simulated noise.
    pub noise: NoiseModel,
    /// Noise assumed by the noise-aware likelihoods.
    pub assumed_noise: NoiseModel,
    pub hybrid: Option<HybridTable>,
    pub powerlaw: Vec<PowerLawPlan>,
}

impl TrialPlan {
    /// Validates `config`, runs the hybrid calibration when needed (or
    /// reads it from the configured file) and solves the power-law
    /// exponents.
    pub fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let hybrid = if !config.has(Algorithm::Hybrid) {
            None
        } else if let Some(path) = &config.hybrid.calibration_file {
            let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            Some(serde_json::from_str(&text)?)
        } else {
            let mut rng = stream_rng(config.seed, CALIBRATION_STREAM);
            Some(calibrate_hybrid(config, config.hybrid.calibration_trials, &mut rng)?)
        };
        Ok(Self::with_calibration(config, hybrid))
    }

    pub fn with_calibration(config: &ExperimentConfig, hybrid: Option<HybridTable>) -> Self {
        let assumed_noise = config.estimator_noise_model();
        let powerlaw = if config.has(Algorithm::PowerLaw) {
            config.powerlaw.target_errors.iter().map(|&eps| plan_powerlaw(config, &assumed_noise, eps)).collect()
        } else {
            Vec::new()
        };
        Self { config: config.clone(), noise: config.noise_model(), assumed_noise, hybrid, powerlaw }
    }

    /// Deepest circuit any enabled estimator reads.
    pub fn pool_depth(&self) -> usize {
        let only_direct = self.config.algorithms.iter().all(|a| *a == Algorithm::Direct);
        if only_direct {
            0
        } else {
            self.config.max_depth
        }
    }
}

fn plan_powerlaw(config: &ExperimentConfig, noise: &NoiseModel, target_eps: f64) -> PowerLawPlan {
    let gammas = &noise.gamma_by_depth()[..=config.max_depth];
    match optimize_exponent(target_eps, config.n_shots, config.max_depth, gammas, &config.powerlaw.search.into()) {
        Ok(nu) => {
            let schedule = power_law_schedule(&PowerLawConfig {
                nu,
                n_shots: config.n_shots,
                max_depth: config.max_depth,
                target_eps,
            });
            PowerLawPlan { target_eps, nu: Some(nu), schedule: Some(schedule), error: None }
        }
        Err(e) => PowerLawPlan { target_eps, nu: None, schedule: None, error: Some(e.to_string()) },
    }
}

/// One estimate with the depth and schedule it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub depth: usize,
    pub schedule: String,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFailure {
    pub trial_id: usize,
    pub algorithm: Algorithm,
    pub depth: usize,
    pub schedule: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_id: usize,
    pub theta_true: f64,
    pub p_true: f64,
    pub pool: Vec<DepthCounts>,
    pub estimates: Vec<EstimateRecord>,
    pub failures: Vec<TrialFailure>,
}

const LINEAR: &str = "linear";

struct Recorder<'a> {
    result: &'a mut TrialResult,
}

impl Recorder<'_> {
    fn push(
        &mut self,
        algorithm: Algorithm,
        depth: usize,
        schedule: &str,
        outcome: Result<Estimate, impl std::fmt::Display>,
    ) -> Option<Estimate> {
        match outcome {
            Ok(estimate) => {
                let rec = EstimateRecord { depth, schedule: schedule.to_string(), estimate: estimate.clone() };
                self.result.estimates.push(rec);
                Some(estimate)
            }
            Err(e) => {
                self.result.failures.push(TrialFailure {
                    trial_id: self.result.trial_id,
                    algorithm,
                    depth,
                    schedule: schedule.to_string(),
                    message: e.to_string(),
                });
                None
            }
        }
    }
}

/// Simulates one shot pool for `pair` and runs every enabled estimator on
/// it. Estimator failures are recorded in the result; only simulation
/// failures abort the trial.
pub fn run_trial<R: Rng + ?Sized>(
    plan: &TrialPlan,
    trial_id: usize,
    pair: &VectorPair,
    rng: &mut R,
) -> Result<TrialResult, HarnessError> {
    let cfg = &plan.config;
    let theta_true = pair.theta();
    let pool = simulate_pool(pair, plan.pool_depth(), cfg.n_shots, &plan.noise, rng)?;
    let mut result = TrialResult {
        trial_id,
        theta_true,
        p_true: theta_true.sin().powi(2),
        pool: pool.clone(),
        estimates: Vec::new(),
        failures: Vec::new(),
    };
    let mut rec = Recorder { result: &mut result };
    let mle_noise = cfg.mle.noise_aware.then_some(&plan.assumed_noise);

    if cfg.has(Algorithm::Direct) {
        rec.push(Algorithm::Direct, 0, LINEAR, direct_estimate(&pool[0]));
    }

    let wants_low = cfg.has(Algorithm::Crt) || cfg.has(Algorithm::Hybrid);
    let mut mle_by_depth: Vec<Option<Estimate>> = vec![None; cfg.max_depth + 1];
    if cfg.has(Algorithm::Mle) {
        for d in 0..=cfg.max_depth {
            mle_by_depth[d] = rec.push(Algorithm::Mle, d, LINEAR, mle_estimate(&pool[..=d], cfg.epsilon, mle_noise));
        }
    }
    if wants_low && cfg.max_depth >= 2 {
        let low = match mle_by_depth[2].clone() {
            Some(e) => Ok(e),
            None => mle_estimate(&pool[..=2], cfg.epsilon, mle_noise),
        };
        for d in 2..=cfg.max_depth {
            let low = match &low {
                Ok(e) => e,
                Err(e) => {
                    for alg in [Algorithm::Crt, Algorithm::Hybrid].into_iter().filter(|a| cfg.has(*a)) {
                        rec.push(alg, d, LINEAR, Err::<Estimate, _>(e.clone()));
                    }
                    continue;
                }
            };
            let crt = crt_estimate(&pool[d], &pool[d - 1], low, d, cfg.crt.offsets);
            if cfg.has(Algorithm::Crt) {
                rec.push(Algorithm::Crt, d, LINEAR, crt.clone());
            }
            if cfg.has(Algorithm::Hybrid) {
                let cal = plan
                    .hybrid
                    .as_ref()
                    .and_then(|t| t.get(d))
                    .ok_or_else(|| format!("no hybrid calibration for depth {d}"));
                let hyb = match (crt, cal) {
                    (Ok(c), Ok(cal)) => Ok(hybrid_estimate(low, &c, &cal)),
                    (Err(e), _) => Err(e.to_string()),
                    (_, Err(e)) => Err(e),
                };
                rec.push(Algorithm::Hybrid, d, LINEAR, hyb);
            }
        }
    }

    for pl in &plan.powerlaw {
        let tag = pl.tag();
        let outcome = match &pl.schedule {
            None => Err(pl.error.clone().unwrap_or_default()),
            Some(schedule) => run_powerlaw(schedule, &pool, cfg.epsilon, &plan.assumed_noise, rng),
        };
        rec.push(Algorithm::PowerLaw, cfg.max_depth, &tag, outcome);
    }
    Ok(result)
}

fn run_powerlaw<R: Rng + ?Sized>(
    schedule: &Schedule,
    pool: &[DepthCounts],
    epsilon: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Estimate, String> {
    let counts = schedule
        .entries()
        .iter()
        .map(|&(d, n)| subsample_without_replacement(&pool[d], n, rng))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    powerlaw_estimate(&counts, epsilon, noise).map_err(|e| e.to_string())
}

/// All trials of one experiment plus run-level fits.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub plan: TrialPlan,
    pub trials: Vec<TrialResult>,
    pub gamma_fit: Option<Vec<f64>>,
    pub gamma_fit_error: Option<String>,
}

impl ExperimentRun {
    pub fn config(&self) -> &ExperimentConfig {
        &self.plan.config
    }

    pub fn failures(&self) -> impl Iterator<Item = &TrialFailure> {
        self.trials.iter().flat_map(|t| &t.failures)
    }
}

/// Runs every trial in parallel, each on its own rng stream, and fits a
/// depolarizing model to the pooled counts.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun, HarnessError> {
    let plan = TrialPlan::new(config)?;
    run_with_plan(plan)
}

pub(crate) fn run_with_plan(plan: TrialPlan) -> Result<ExperimentRun, HarnessError> {
    let cfg = &plan.config;
    let trials = (0..cfg.n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            let pair = sample_vector_pair(&mut rng, cfg.vector_mode);
            run_trial(&plan, i, &pair, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let samples: Vec<FitSample> =
        trials.iter().flat_map(|t| t.pool.iter().map(|c| FitSample { theta: t.theta_true, counts: *c })).collect();
    let (gamma_fit, gamma_fit_error) = match fit_depolarizing(&samples) {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ExperimentRun { plan, trials, gamma_fit, gamma_fit_error })
}

/// Counts at every depth for `config.n_trials` fresh inputs, for fitting
/// the depolarizing model.
pub fn training_samples(config: &ExperimentConfig) -> Result<Vec<FitSample>, HarnessError> {
    config.validate()?;
    let noise = config.noise_model();
    let per_trial = (0..config.n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, TRAINING_STREAM + i as u64);
            let pair = sample_vector_pair(&mut rng, config.vector_mode);
            let pool = simulate_pool(&pair, config.max_depth, config.n_shots, &noise, &mut rng)?;
            let theta = pair.theta();
            Ok(pool.into_iter().map(|counts| FitSample { theta, counts }).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}
