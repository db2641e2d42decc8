use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulator::DepthCounts;

/// Counts from one input with known angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSample {
    pub theta: f64,
    pub counts: DepthCounts,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("no samples to fit")]
    Empty,
    #[error("depth {depth} has {trials} usable trials, need at least 2")]
    InsufficientData { depth: usize, trials: usize },
    #[error("depth {0} is unidentifiable: every sample sits at p = 1/2")]
    Unidentifiable(usize),
}

/// Below this weighted mean of `cos²(2kθ)` the contrast cannot be told
/// apart from zero.
const MIN_LEVERAGE: f64 = 1e-6;

/// Per-depth damping rates from observed good fractions.
///
/// The model is `1 − 2r = c·cos(2(2d+1)θ)` with `c = e^{−γ_d}`; `c` is the
/// shot-weighted least-squares slope, clamped to `(0, 1]`. Readout error
/// is absorbed into the fitted rates.
pub fn fit_depolarizing(samples: &[FitSample]) -> Result<Vec<f64>, FitError> {
    let max_depth = samples.iter().map(|s| s.counts.depth).max().ok_or(FitError::Empty)?;
    (0..=max_depth)
        .map(|depth| {
            let mut trials = 0;
            let (mut suy, mut suu, mut sw) = (0.0, 0.0, 0.0);
            for s in samples.iter().filter(|s| s.counts.depth == depth) {
                let Some(r) = s.counts.good_fraction() else { continue };
                let w = s.counts.kept() as f64;
                let u = (2.0 * (2 * depth + 1) as f64 * s.theta).cos();
                suy += w * u * (1.0 - 2.0 * r);
                suu += w * u * u;
                sw += w;
                trials += 1;
            }
            if trials < 2 {
                return Err(FitError::InsufficientData { depth, trials });
            }
            let c = suy / suu;
            if suu / sw < MIN_LEVERAGE || c.is_nan() || c <= 0.0 {
                return Err(FitError::Unidentifiable(depth));
            }
            Ok(-c.min(1.0).ln())
        })
        .collect()
}
