use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{sample_vector_pair, simulate_pool};
use super::HarnessError;
use crate::estimators::{crt_estimate, crt_reconstruct, hybrid_estimate, mle_estimate, HybridCalibration};
use crate::simulator::analytic_success_prob;

/// Hybrid thresholds for one CRT depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridEntry {
    pub depth: usize,
    /// Mean `|p̂ − p|` of CRT fed exact success probabilities.
    pub crt_exact_at_d: f64,
    pub beta_hybrid: f64,
}

/// Calibration file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridTable {
    pub n_trials: usize,
    /// Mean `|p̂ − p|` of the MLE over depths 0..=2.
    pub mle_avg_depth2: f64,
    pub entries: Vec<HybridEntry>,
}

impl HybridTable {
    pub fn get(&self, depth: usize) -> Option<HybridCalibration> {
        self.entries.iter().find(|e| e.depth == depth).map(|e| HybridCalibration {
            mle_avg_depth2: self.mle_avg_depth2,
            crt_exact_at_d: e.crt_exact_at_d,
            beta_hybrid: e.beta_hybrid,
        })
    }
}

struct CalibrationDraw {
    p_true: f64,
    mle: crate::estimators::Estimate,
    crt: Vec<Option<crate::estimators::Estimate>>,
}

/// Estimates the hybrid thresholds on `n_trials` fresh inputs drawn from
/// the configured prior and noise model.
///
/// The CRT reference error uses exact success probabilities at depths `D`
/// and `D − 1` together with the noisy depth-2 MLE angle, which is what
/// fixes the signs and picks the candidate in a real run. With
/// `tune_beta`, each depth takes the grid multiplier with the lowest mean
/// hybrid error on these same draws (first one on ties).
pub fn calibrate_hybrid<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    n_trials: usize,
    rng: &mut R,
) -> Result<HybridTable, HarnessError> {
    if n_trials == 0 {
        return Err(HarnessError::Config("calibration needs at least one trial".into()));
    }
    if config.max_depth < 2 {
        return Err(HarnessError::Config("hybrid calibration needs max_depth >= 2".into()));
    }
    let noise = config.noise_model();
    let assumed = config.estimator_noise_model();
    let mle_noise = config.mle.noise_aware.then_some(&assumed);
    let depths: Vec<usize> = (2..=config.max_depth).collect();
    let mut exact_err = vec![0.0; depths.len()];
    let mut draws = Vec::with_capacity(n_trials);

    for _ in 0..n_trials {
        let pair = sample_vector_pair(rng, config.vector_mode);
        let theta = pair.theta();
        let p_true = theta.sin().powi(2);
        let pool_depth = if config.hybrid.tune_beta { config.max_depth } else { 2 };
        let pool = simulate_pool(&pair, pool_depth, config.n_shots, &noise, rng)?;
        let mle = mle_estimate(&pool[..=2], config.epsilon, mle_noise)?;
        let mut crt = Vec::with_capacity(depths.len());
        for (i, &d) in depths.iter().enumerate() {
            let exact = crt_reconstruct(
                analytic_success_prob(theta, d),
                analytic_success_prob(theta, d - 1),
                mle.theta_hat(),
                d,
                config.crt.offsets,
            )?;
            exact_err[i] += (exact.theta().sin().powi(2) - p_true).abs();
            if config.hybrid.tune_beta {
                crt.push(crt_estimate(&pool[d], &pool[d - 1], &mle, d, config.crt.offsets).ok());
            }
        }
        draws.push(CalibrationDraw { p_true, mle, crt });
    }

    let n = n_trials as f64;
    let mle_avg_depth2 = draws.iter().map(|c| (c.mle.p_hat() - c.p_true).abs()).sum::<f64>() / n;
    let entries = depths
        .iter()
        .enumerate()
        .map(|(i, &depth)| {
            let crt_exact_at_d = exact_err[i] / n;
            let beta_hybrid = if config.hybrid.tune_beta {
                tune_beta(&draws, i, mle_avg_depth2, crt_exact_at_d, &config.hybrid.beta_grid)
            } else {
                config.hybrid.beta
            };
            HybridEntry { depth, crt_exact_at_d, beta_hybrid }
        })
        .collect();
    Ok(HybridTable { n_trials, mle_avg_depth2, entries })
}

fn tune_beta(draws: &[CalibrationDraw], slot: usize, mle_avg: f64, crt_exact: f64, grid: &[f64]) -> f64 {
    let mut best = (f64::INFINITY, grid[0]);
    for &beta in grid {
        let cal = HybridCalibration { mle_avg_depth2: mle_avg, crt_exact_at_d: crt_exact, beta_hybrid: beta };
        let err: f64 = draws
            .iter()
            .map(|c| {
                let est = match &c.crt[slot] {
                    Some(crt) => hybrid_estimate(&c.mle, crt, &cal),
                    None => c.mle.clone(),
                };
                (est.p_hat() - c.p_true).abs()
            })
            .sum();
        if err < best.0 {
            best = (err, beta);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::stream_rng;
    use crate::noise::NoiseModel;

    #[test]
    fn single_trial_is_finite() {
        let cfg = ExperimentConfig::default();
        let t = calibrate_hybrid(&cfg, 1, &mut stream_rng(1, 0)).unwrap();
        assert!(t.mle_avg_depth2.is_finite());
        assert_eq!(t.entries.len(), 6);
        assert!(t.entries.iter().all(|e| e.crt_exact_at_d.is_finite() && e.beta_hybrid == 1.0));
        assert!(t.get(2).is_some() && t.get(8).is_none());
    }

    #[test]
    fn noiseless_depth2_mle_near_cramer_rao() {
        let cfg = ExperimentConfig { noise: Some(NoiseModel::noiseless(7)), n_shots: 5000, ..Default::default() };
        let t = calibrate_hybrid(&cfg, 200, &mut stream_rng(3, 0)).unwrap();
        // θ scale 1/√(N·35); |dp/dθ| = |sin 2θ| ≤ 1
        let cr = 1.0 / (5000.0f64 * 35.0).sqrt();
        assert!(t.mle_avg_depth2 < 2.0 * cr, "{} vs {cr}", t.mle_avg_depth2);
    }

    #[test]
    fn tuned_beta_comes_from_grid() {
        let mut cfg = ExperimentConfig::default();
        cfg.hybrid.tune_beta = true;
        let t = calibrate_hybrid(&cfg, 20, &mut stream_rng(4, 0)).unwrap();
        assert!(t.entries.iter().all(|e| cfg.hybrid.beta_grid.contains(&e.beta_hybrid)));
        let back: HybridTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
