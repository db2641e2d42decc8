//! Effective depolarizing and readout noise at the level of outcome
//! probabilities.
//!
//! A depth-`d` circuit keeps its ideal outcome statistics with weight
//! `1 − η_d = (1 − β)·e^{−γ_d}` and is fully mixed otherwise, so the good
//! outcome is seen with probability `p(1 − η_d) + η_d / 2`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::{analytic_success_prob, DepthCounts};

/// Per-depth rate at depth 0 for the default linear profile.
pub const DEFAULT_GAMMA_FIRST: f64 = 0.035;
/// Per-depth rate at depth 7 for the default linear profile.
pub const DEFAULT_GAMMA_LAST: f64 = 0.35;
const DEFAULT_PROFILE_DEPTH: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("depth {depth} outside noise model range 0..={max_depth}")]
    DepthOutOfRange { depth: usize, max_depth: usize },
    #[error("invalid noise parameter: {0}")]
    InvalidParameter(String),
}

/// Two-state burst modulator for time-correlated errors.
///
/// Before every shot the modulator state is redrawn with probability
/// `p_switch`; otherwise it persists. The bursty state carries the noise
/// `min(1, η·burst_scale)` and the calm state is noiseless, with the
/// bursty share chosen so the per-shot marginal noise stays `η`. With
/// `p_switch = 1` or `burst_scale = 1` the shots are independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelatedNoise {
    pub p_switch: f64,
    pub burst_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoiseModel {
    beta_readout: f64,
    gamma_by_depth: Vec<f64>,
    #[serde(default)]
    leak: f64,
    #[serde(default)]
    correlation: Option<CorrelatedNoise>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoiseModel", into = "RawNoiseModel")]
pub struct NoiseModel {
    beta_readout: f64,
    gamma_by_depth: Vec<f64>,
    leak: f64,
    correlation: Option<CorrelatedNoise>,
}

impl TryFrom<RawNoiseModel> for NoiseModel {
    type Error = NoiseError;

    fn try_from(raw: RawNoiseModel) -> Result<Self, Self::Error> {
        let model = NoiseModel::new(raw.beta_readout, raw.gamma_by_depth)?.with_leak(raw.leak)?;
        match raw.correlation {
            Some(c) => model.with_correlation(c),
            None => Ok(model),
        }
    }
}

impl From<NoiseModel> for RawNoiseModel {
    fn from(m: NoiseModel) -> Self {
        RawNoiseModel {
            beta_readout: m.beta_readout,
            gamma_by_depth: m.gamma_by_depth,
            leak: m.leak,
            correlation: m.correlation,
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::default_linear(DEFAULT_PROFILE_DEPTH)
    }
}

fn check_probability(name: &str, v: f64, upper_inclusive: bool) -> Result<(), NoiseError> {
    let ok = v >= 0.0 && if upper_inclusive { v <= 1.0 } else { v < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(NoiseError::InvalidParameter(format!("{name} = {v}")))
    }
}

impl NoiseModel {
    /// `gamma_by_depth[d]` is the damping rate at depth `d`; it must be
    /// nonnegative and nondecreasing.
    pub fn new(beta_readout: f64, gamma_by_depth: Vec<f64>) -> Result<Self, NoiseError> {
        check_probability("beta_readout", beta_readout, false)?;
        if gamma_by_depth.is_empty() {
            return Err(NoiseError::InvalidParameter("gamma_by_depth is empty".into()));
        }
        if gamma_by_depth.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(NoiseError::InvalidParameter("gamma must be finite and >= 0".into()));
        }
        if gamma_by_depth.windows(2).any(|w| w[1] < w[0]) {
            return Err(NoiseError::InvalidParameter("gamma must be nondecreasing in depth".into()));
        }
        Ok(Self { beta_readout, gamma_by_depth, leak: 0.0, correlation: None })
    }

    pub fn noiseless(max_depth: usize) -> Self {
        Self::new(0.0, vec![0.0; max_depth + 1]).expect("valid")
    }

    /// Rates interpolated linearly from `gamma_first` at depth 0 to
    /// `gamma_last` at `max_depth`.
    pub fn linear(beta_readout: f64, gamma_first: f64, gamma_last: f64, max_depth: usize) -> Result<Self, NoiseError> {
        let gammas = (0..=max_depth)
            .map(|d| {
                if max_depth == 0 {
                    gamma_first
                } else {
                    gamma_first + (gamma_last - gamma_first) * d as f64 / max_depth as f64
                }
            })
            .collect();
        Self::new(beta_readout, gammas)
    }

    /// Default profile: `γ` rising linearly from 0.035 at depth 0 to 0.35
    /// at depth 7 (extended with the same slope past depth 7), no readout
    /// error, no leakage.
    pub fn default_linear(max_depth: usize) -> Self {
        let slope = (DEFAULT_GAMMA_LAST - DEFAULT_GAMMA_FIRST) / DEFAULT_PROFILE_DEPTH as f64;
        let gammas = (0..=max_depth).map(|d| DEFAULT_GAMMA_FIRST + slope * d as f64).collect();
        Self::new(0.0, gammas).expect("valid")
    }

    /// Probability that a shot leaks out of the unary code space.
    pub fn with_leak(mut self, leak: f64) -> Result<Self, NoiseError> {
        check_probability("leak", leak, false)?;
        self.leak = leak;
        Ok(self)
    }

    pub fn with_correlation(mut self, c: CorrelatedNoise) -> Result<Self, NoiseError> {
        check_probability("p_switch", c.p_switch, true)?;
        if !(c.burst_scale >= 1.0 && c.burst_scale.is_finite()) {
            return Err(NoiseError::InvalidParameter(format!("burst_scale = {}", c.burst_scale)));
        }
        self.correlation = Some(c);
        Ok(self)
    }

    pub fn without_correlation(mut self) -> Self {
        self.correlation = None;
        self
    }

    pub fn beta_readout(&self) -> f64 {
        self.beta_readout
    }

    pub fn gamma_by_depth(&self) -> &[f64] {
        &self.gamma_by_depth
    }

    pub fn leak(&self) -> f64 {
        self.leak
    }

    pub fn correlation(&self) -> Option<CorrelatedNoise> {
        self.correlation
    }

    pub fn max_depth(&self) -> usize {
        self.gamma_by_depth.len() - 1
    }

    pub fn gamma(&self, depth: usize) -> Result<f64, NoiseError> {
        self.gamma_by_depth
            .get(depth)
            .copied()
            .ok_or(NoiseError::DepthOutOfRange { depth, max_depth: self.max_depth() })
    }

    /// `η_d = 1 − (1 − β)·e^{−γ_d}`.
    pub fn effective_eta(&self, depth: usize) -> Result<f64, NoiseError> {
        Ok(1.0 - self.contrast(depth)?)
    }

    /// Surviving contrast `1 − η_d`.
    pub fn contrast(&self, depth: usize) -> Result<f64, NoiseError> {
        Ok((1.0 - self.beta_readout) * (-self.gamma(depth)?).exp())
    }

    /// Good-outcome probability at `depth` under this model.
    pub fn noisy_prob(&self, theta: f64, depth: usize) -> Result<f64, NoiseError> {
        Ok(depolarized_prob(theta, depth, self.effective_eta(depth)?))
    }
}

/// `(1 − (1 − η)·cos(2(2d + 1)θ)) / 2`.
pub fn depolarized_prob(theta: f64, depth: usize, eta: f64) -> f64 {
    let k = (2 * depth + 1) as f64;
    0.5 * (1.0 - (1.0 - eta) * (2.0 * k * theta).cos())
}

/// Distribution of the true success probability `p = sin²θ`, written as a
/// density over `θ ∈ [0, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum ProbabilityPrior {
    /// `p` uniform on `[0, 1]`.
    UniformP,
    /// `θ` uniform on `[0, π/2]`.
    UniformTheta,
    /// `p = (x·y)²` for independent Haar-random unit 4-vectors.
    Haar,
    PointMass(f64),
}

impl ProbabilityPrior {
    fn theta_density(&self, theta: f64) -> f64 {
        match self {
            ProbabilityPrior::UniformP => (2.0 * theta).sin(),
            ProbabilityPrior::UniformTheta => 1.0 / FRAC_PI_2,
            ProbabilityPrior::Haar => 4.0 / std::f64::consts::PI * theta.cos().powi(2),
            ProbabilityPrior::PointMass(_) => unreachable!("point mass has no density"),
        }
    }

    /// `E|½ − p|` under the prior.
    pub fn mean_distance_from_half(&self) -> f64 {
        match *self {
            ProbabilityPrior::PointMass(p) => (0.5 - p).abs(),
            _ => simpson(|t| (0.5 - t.sin().powi(2)).abs() * self.theta_density(t), 0.0, FRAC_PI_2, 4096),
        }
    }
}

/// Composite Simpson rule; `n` must be even. With `n` divisible by 4 the
/// kink of `|½ − sin²θ|` at `π/4` falls on a node.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Expected error floor of direct sampling: `η_d · E|½ − p|`.
pub fn noise_floor(model: &NoiseModel, depth: usize, prior: &ProbabilityPrior) -> Result<f64, NoiseError> {
    Ok(model.effective_eta(depth)? * prior.mean_distance_from_half())
}

/// Noisy shots at `depth` for an oracle with angle `theta`.
pub fn sample_noisy_shots<R: Rng + ?Sized>(
    theta: f64,
    depth: usize,
    shots: u64,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<DepthCounts, NoiseError> {
    sample_noisy_counts(analytic_success_prob(theta, depth), depth, shots, model, rng)
}

/// Noisy shots at `depth` given the ideal good-outcome probability.
pub fn sample_noisy_counts<R: Rng + ?Sized>(
    ideal_good: f64,
    depth: usize,
    shots: u64,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<DepthCounts, NoiseError> {
    let eta = model.effective_eta(depth)?;
    let ideal = ideal_good.clamp(0.0, 1.0);
    let mut counts = DepthCounts::empty(depth);
    let mut modulator = model.correlation.map(|c| BurstModulator::new(c, eta));
    let mut bursty = match modulator.as_mut() {
        Some(m) => m.initial(rng),
        None => false,
    };
    for _ in 0..shots {
        if model.leak > 0.0 && rng.random::<f64>() < model.leak {
            counts.discarded += 1;
            continue;
        }
        let shot_eta = match modulator.as_ref() {
            Some(m) => {
                bursty = m.step(bursty, rng);
                if bursty {
                    m.burst_eta
                } else {
                    0.0
                }
            }
            None => eta,
        };
        let p = ideal * (1.0 - shot_eta) + 0.5 * shot_eta;
        if rng.random::<f64>() < p {
            counts.good += 1;
        } else {
            counts.bad += 1;
        }
    }
    Ok(counts)
}

struct BurstModulator {
    p_switch: f64,
    burst_eta: f64,
    burst_share: f64,
}

impl BurstModulator {
    fn new(c: CorrelatedNoise, eta: f64) -> Self {
        let burst_eta = (eta * c.burst_scale).min(1.0);
        let burst_share = if burst_eta > 0.0 { eta / burst_eta } else { 0.0 };
        Self { p_switch: c.p_switch, burst_eta, burst_share }
    }

    fn initial<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        rng.random::<f64>() < self.burst_share
    }

    fn step<R: Rng + ?Sized>(&self, bursty: bool, rng: &mut R) -> bool {
        if rng.random::<f64>() < self.p_switch {
            self.initial(rng)
        } else {
            bursty
        }
    }
}
