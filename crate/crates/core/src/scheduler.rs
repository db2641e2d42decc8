//! Power-law shot schedules `N_d = ⌊N·(2d+1)^ν⌋`, the damped Fisher
//! information they carry, and the exponent search that meets a target
//! error with the fewest oracle calls.

use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::Schedule;
use crate::simulator::DepthCounts;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("no noise rate for depth {0}")]
    MissingGamma(usize),
    #[error("target error {target_eps} unreachable: information {best} < {needed} at nu = {nu_max}")]
    Infeasible { target_eps: f64, nu_max: f64, best: f64, needed: f64 },
    #[error("requested {requested} shots from a pool of {available}")]
    ExceedsPool { requested: u64, available: u64 },
    #[error("invalid scheduler input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawConfig {
    pub nu: f64,
    pub n_shots: u64,
    pub max_depth: usize,
    pub target_eps: f64,
}

/// Bracket and resolution of the exponent search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NuSearch {
    pub min: f64,
    pub max: f64,
    pub resolution: f64,
}

impl Default for NuSearch {
    fn default() -> Self {
        Self { min: -6.0, max: 6.0, resolution: 1e-4 }
    }
}

pub fn power_law_schedule(config: &PowerLawConfig) -> Schedule {
    let entries = (0..=config.max_depth)
        .map(|d| {
            let k = (2 * d + 1) as f64;
            (d, (config.n_shots as f64 * k.powf(config.nu)).floor() as u64)
        })
        .collect();
    Schedule::new(entries).expect("depths are distinct")
}

/// `N·Σ_{d≤D} (2d+1)^{ν+2}·e^{−2γ_d}`.
pub fn fisher_noisy(nu: f64, n_shots: u64, max_depth: usize, gamma_by_depth: &[f64]) -> Result<f64, SchedulerError> {
    if gamma_by_depth.len() <= max_depth {
        return Err(SchedulerError::MissingGamma(gamma_by_depth.len()));
    }
    let sum: f64 = gamma_by_depth[..=max_depth]
        .iter()
        .enumerate()
        .map(|(d, g)| ((2 * d + 1) as f64).powf(nu + 2.0) * (-2.0 * g).exp())
        .sum();
    Ok(n_shots as f64 * sum)
}

/// Smallest `ν` in the search bracket whose damped Fisher information
/// reaches `ε^{−2}`. The information grows with `ν`, so the constraint
/// binds and bisection finds it.
pub fn optimize_exponent(
    target_eps: f64,
    n_shots: u64,
    max_depth: usize,
    gamma_by_depth: &[f64],
    search: &NuSearch,
) -> Result<f64, SchedulerError> {
    if target_eps.is_nan() || target_eps <= 0.0 || n_shots == 0 {
        return Err(SchedulerError::Invalid(format!("target_eps = {target_eps}, n_shots = {n_shots}")));
    }
    if !(search.min < search.max && search.resolution > 0.0) {
        return Err(SchedulerError::Invalid(format!("{search:?}")));
    }
    let needed = target_eps.powi(-2);
    let info = |nu: f64| fisher_noisy(nu, n_shots, max_depth, gamma_by_depth);
    if info(search.min)? >= needed {
        return Ok(search.min);
    }
    let best = info(search.max)?;
    if best < needed {
        return Err(SchedulerError::Infeasible { target_eps, nu_max: search.max, best, needed });
    }
    let (mut lo, mut hi) = (search.min, search.max);
    while hi - lo > search.resolution {
        let mid = 0.5 * (lo + hi);
        if info(mid)? >= needed {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Draws `n` of the recorded shots without replacement, keeping their
/// good / bad / discarded labels.
pub fn subsample_without_replacement<R: Rng + ?Sized>(
    pool: &DepthCounts,
    n: u64,
    rng: &mut R,
) -> Result<DepthCounts, SchedulerError> {
    let total = pool.total();
    if n > total {
        return Err(SchedulerError::ExceedsPool { requested: n, available: total });
    }
    if n == total {
        return Ok(*pool);
    }
    if n == 0 {
        return Ok(DepthCounts::empty(pool.depth));
    }
    let hyper = |population: u64, marked: u64, draws: u64, rng: &mut R| -> u64 {
        if draws == 0 || marked == 0 {
            return 0;
        }
        if marked == population {
            return draws;
        }
        Hypergeometric::new(population, marked, draws).expect("valid parameters").sample(rng)
    };
    let good = hyper(total, pool.good, n, rng);
    let bad = hyper(total - pool.good, pool.bad, n - good, rng);
    Ok(DepthCounts::new(pool.depth, good, bad, n - good - bad))
}
