//! Amplitude estimators: direct sampling, grid-posterior maximum
//! likelihood (optionally noise-aware), CRT reconstruction from two
//! coprime depths, and the hybrid selector between the last two.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::{NoiseError, NoiseModel};
use crate::simulator::DepthCounts;

/// Default grid resolution: 1000 buckets over `[0, π/2)`.
pub const DEFAULT_EPSILON: f64 = 0.001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("no shots survived postselection")]
    NoKeptShots,
    #[error("direct estimate needs depth-0 counts, got depth {0}")]
    NotDepthZero(usize),
    #[error("posterior underflowed to zero after depth-{0} update")]
    PosteriorUnderflow(usize),
    #[error("grid resolution {0} must lie in (0, 1]")]
    InvalidEpsilon(f64),
    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u64, u64),
    #[error("CRT needs max depth >= 2, got {0}")]
    CrtDepth(usize),
    #[error("schedule repeats depth {0}")]
    DuplicateDepth(usize),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Direct,
    Mle,
    Crt,
    Hybrid,
    #[serde(rename = "powerlaw")]
    PowerLaw,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::Direct, Algorithm::Mle, Algorithm::Crt, Algorithm::Hybrid, Algorithm::PowerLaw];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Direct => "direct",
            Algorithm::Mle => "mle",
            Algorithm::Crt => "crt",
            Algorithm::Hybrid => "hybrid",
            Algorithm::PowerLaw => "powerlaw",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL.into_iter().find(|a| a.as_str() == s.trim()).ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// Which estimate the hybrid selector returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Crt,
    Mle,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Crt => "crt",
            Branch::Mle => "mle",
        }
    }
}

/// Gap between observed and fitted good rate at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthResidual {
    pub depth: usize,
    pub observed: f64,
    pub predicted: f64,
}

/// Final angle estimate with its oracle-call cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    theta_hat: f64,
    p_hat: f64,
    oracle_calls: u64,
    algorithm: Algorithm,
    branch: Option<Branch>,
    depths: Vec<usize>,
    residuals: Vec<DepthResidual>,
}

impl Estimate {
    /// `depths` lists the circuit depths whose shots were consumed; it is
    /// used to avoid double counting shots shared between estimators.
    pub fn new(theta_hat: f64, oracle_calls: u64, algorithm: Algorithm, depths: Vec<usize>) -> Self {
        Self {
            theta_hat,
            p_hat: theta_hat.sin().powi(2),
            oracle_calls,
            algorithm,
            branch: None,
            depths,
            residuals: Vec::new(),
        }
    }

    pub fn theta_hat(&self) -> f64 {
        self.theta_hat
    }

    pub fn p_hat(&self) -> f64 {
        self.p_hat
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn branch(&self) -> Option<Branch> {
        self.branch
    }

    pub fn depths(&self) -> &[usize] {
        &self.depths
    }

    pub fn residuals(&self) -> &[DepthResidual] {
        &self.residuals
    }
}

/// Measurement schedule: distinct depths with their shot counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    entries: Vec<(usize, u64)>,
}

impl Schedule {
    pub fn new(entries: Vec<(usize, u64)>) -> Result<Self, EstimatorError> {
        let mut seen = std::collections::BTreeSet::new();
        for &(d, _) in &entries {
            if !seen.insert(d) {
                return Err(EstimatorError::DuplicateDepth(d));
            }
        }
        Ok(Self { entries })
    }

    /// `(d, shots)` for every `d` in `0..=max_depth`.
    pub fn linear(max_depth: usize, shots: u64) -> Self {
        Self { entries: (0..=max_depth).map(|d| (d, shots)).collect() }
    }

    pub fn entries(&self) -> &[(usize, u64)] {
        &self.entries
    }

    pub fn shots_at(&self, depth: usize) -> Option<u64> {
        self.entries.iter().find(|(d, _)| *d == depth).map(|(_, n)| *n)
    }

    /// `Σ N_d (2d + 1)`.
    pub fn oracle_calls(&self) -> u64 {
        self.entries.iter().map(|&(d, n)| n * (2 * d as u64 + 1)).sum()
    }
}

/// Discrete posterior over `θ_k = π k ε / 2`, `k ∈ [0, 1/ε)`, kept as
/// normalized log-weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    epsilon: f64,
    log_weights: Vec<f64>,
}

impl PosteriorGrid {
    pub fn uniform(epsilon: f64) -> Result<Self, EstimatorError> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(EstimatorError::InvalidEpsilon(epsilon));
        }
        // smallest n with n·ε ≥ 1, tolerant of 1/ε landing a hair above an integer
        let n = ((1.0 / epsilon) - 1e-9).ceil().max(1.0) as usize;
        let lw = -(n as f64).ln();
        Ok(Self { epsilon, log_weights: vec![lw; n] })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn theta(&self, k: usize) -> f64 {
        std::f64::consts::FRAC_PI_2 * k as f64 * self.epsilon
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    /// Index of the largest weight; ties go to the smaller index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &l) in self.log_weights.iter().enumerate() {
            if l > self.log_weights[best] {
                best = k;
            }
        }
        best
    }

    pub fn map_theta(&self) -> f64 {
        self.theta(self.argmax())
    }

    /// Multiplies in the likelihood of `counts`. Without a noise model the
    /// good-outcome probability is `sin²((2d+1)θ)`; with one it is the
    /// depolarized probability at the counts' depth.
    pub fn update(&mut self, counts: &DepthCounts, noise: Option<&NoiseModel>) -> Result<(), EstimatorError> {
        if counts.kept() == 0 {
            return Ok(());
        }
        let depth = counts.depth;
        let (good, bad) = (counts.good as f64, counts.bad as f64);
        let mut max = f64::NEG_INFINITY;
        for k in 0..self.len() {
            let p1 = good_probability(self.theta(k), depth, noise)?;
            let mut ll = 0.0;
            if counts.good > 0 {
                ll += good * p1.ln();
            }
            if counts.bad > 0 {
                ll += bad * (1.0 - p1).ln();
            }
            let l = self.log_weights[k] + ll;
            self.log_weights[k] = l;
            max = max.max(l);
        }
        if max == f64::NEG_INFINITY || max.is_nan() {
            return Err(EstimatorError::PosteriorUnderflow(depth));
        }
        let sum: f64 = self.log_weights.iter().map(|l| (l - max).exp()).sum();
        let shift = max + sum.ln();
        for l in &mut self.log_weights {
            *l -= shift;
        }
        Ok(())
    }
}

fn good_probability(theta: f64, depth: usize, noise: Option<&NoiseModel>) -> Result<f64, NoiseError> {
    match noise {
        Some(m) => m.noisy_prob(theta, depth),
        None => Ok(crate::simulator::analytic_success_prob(theta, depth)),
    }
}

/// Good fraction at depth 0 only.
pub fn direct_estimate(counts: &DepthCounts) -> Result<Estimate, EstimatorError> {
    if counts.depth != 0 {
        return Err(EstimatorError::NotDepthZero(counts.depth));
    }
    let p = counts.good_fraction().ok_or(EstimatorError::NoKeptShots)?;
    Ok(Estimate::new(p.sqrt().asin(), counts.oracle_calls(), Algorithm::Direct, vec![0]))
}

/// Posterior-mode estimate after updating a uniform grid with every depth
/// in order.
pub fn mle_estimate(
    counts_by_depth: &[DepthCounts],
    epsilon: f64,
    noise: Option<&NoiseModel>,
) -> Result<Estimate, EstimatorError> {
    grid_estimate(counts_by_depth, epsilon, noise, Algorithm::Mle)
}

/// Noise-aware posterior mode on a power-law subsample.
pub fn powerlaw_estimate(
    counts_by_depth: &[DepthCounts],
    epsilon: f64,
    noise: &NoiseModel,
) -> Result<Estimate, EstimatorError> {
    grid_estimate(counts_by_depth, epsilon, Some(noise), Algorithm::PowerLaw)
}

fn grid_estimate(
    counts_by_depth: &[DepthCounts],
    epsilon: f64,
    noise: Option<&NoiseModel>,
    algorithm: Algorithm,
) -> Result<Estimate, EstimatorError> {
    let mut grid = PosteriorGrid::uniform(epsilon)?;
    if counts_by_depth.iter().all(|c| c.kept() == 0) {
        return Err(EstimatorError::NoKeptShots);
    }
    for c in counts_by_depth {
        grid.update(c, noise)?;
    }
    let theta = grid.map_theta();
    let calls = counts_by_depth.iter().map(DepthCounts::oracle_calls).sum();
    let depths = counts_by_depth.iter().map(|c| c.depth).collect();
    let mut est = Estimate::new(theta, calls, algorithm, depths);
    for c in counts_by_depth {
        if let Some(observed) = c.good_fraction() {
            let predicted = good_probability(theta, c.depth, noise)?;
            est.residuals.push(DepthResidual { depth: c.depth, observed, predicted });
        }
    }
    Ok(est)
}

/// Unique `v ∈ [0, n1·n2)` with `v ≡ r1 (mod n1)` and `v ≡ r2 (mod n2)`.
pub fn crt_solve(r1: i64, n1: u64, r2: i64, n2: u64) -> Result<u64, EstimatorError> {
    let (g, inv, _) = extended_gcd(n1 as i128, n2 as i128);
    if g != 1 || n1 == 0 || n2 == 0 {
        return Err(EstimatorError::NotCoprime(n1, n2));
    }
    let (n1, n2) = (n1 as i128, n2 as i128);
    let (r1, r2) = ((r1 as i128).rem_euclid(n1), (r2 as i128).rem_euclid(n2));
    // v = r1 + n1·k with n1·k ≡ r2 − r1 (mod n2)
    let k = ((r2 - r1) * inv).rem_euclid(n2);
    Ok((r1 + n1 * k).rem_euclid(n1 * n2) as u64)
}

/// `(g, x, y)` with `a·x + b·y = g = gcd(a, b)`.
fn extended_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_x, mut x) = (1i128, 0i128);
    let (mut old_y, mut y) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_x, x) = (x, old_x - q * x);
        (old_y, y) = (y, old_y - q * y);
    }
    (old_r, old_x, old_y)
}

/// Residue offsets tried around the floored folded angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetSet {
    /// `(t mod 2, ⌊t/2⌋)` for `t = 1..=4`.
    Minimal,
    /// All of `{−1, 0, 1}²`.
    #[default]
    Extended,
}

impl OffsetSet {
    pub fn offsets(&self) -> &'static [(i64, i64)] {
        match self {
            OffsetSet::Minimal => &[(1, 0), (0, 1), (1, 1), (0, 2)],
            OffsetSet::Extended => &[(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)],
        }
    }
}

/// Intermediate quantities of one CRT reconstruction.
///
/// With `θ = vπ/M`, `M = n1·n2`, `n1 = 2D − 1`, `n2 = 2D + 1`, the depth-D
/// circuit sees the angle `(2D+1)θ = vπ/n1`, so its folded angle fixes
/// `v mod n1`; the depth-(D−1) circuit likewise fixes `v mod n2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrtContext {
    pub max_depth: usize,
    pub n1: u64,
    pub n2: u64,
    pub modulus: u64,
    /// Folded residue estimate modulo `n1`, before the sign.
    pub l: f64,
    /// Folded residue estimate modulo `n2`, before the sign.
    pub h: f64,
    pub s1: i64,
    pub s2: i64,
    pub candidates: Vec<u64>,
    pub selected: u64,
}

impl CrtContext {
    /// `vπ/M` folded into `[0, π/2]`.
    pub fn theta(&self) -> f64 {
        let t = self.selected as f64 * std::f64::consts::PI / self.modulus as f64;
        if t > std::f64::consts::FRAC_PI_2 {
            std::f64::consts::PI - t
        } else {
            t
        }
    }
}

fn sign(x: f64) -> i64 {
    if x < 0.0 {
        -1
    } else {
        1
    }
}

/// CRT reconstruction from success probabilities at depths `D` and `D − 1`
/// and a coarse angle `theta_prime` used for signs and candidate selection.
pub fn crt_reconstruct(
    p_d: f64,
    p_dm1: f64,
    theta_prime: f64,
    max_depth: usize,
    offsets: OffsetSet,
) -> Result<CrtContext, EstimatorError> {
    if max_depth < 2 {
        return Err(EstimatorError::CrtDepth(max_depth));
    }
    let n1 = 2 * max_depth as u64 - 1;
    let n2 = 2 * max_depth as u64 + 1;
    let modulus = n1 * n2;
    let pi = std::f64::consts::PI;
    let l = n1 as f64 / pi * p_d.clamp(0.0, 1.0).sqrt().asin();
    let h = n2 as f64 / pi * p_dm1.clamp(0.0, 1.0).sqrt().asin();
    let s1 = sign((2.0 * n2 as f64 * theta_prime).sin());
    let s2 = sign((2.0 * n1 as f64 * theta_prime).sin());
    let base1 = (s1 as f64 * l).floor() as i64;
    let base2 = (s2 as f64 * h).floor() as i64;

    let p0 = theta_prime.sin().powi(2);
    let mut candidates = Vec::with_capacity(offsets.offsets().len());
    let mut best: Option<(f64, u64)> = None;
    for &(d1, d2) in offsets.offsets() {
        let v = crt_solve(base1 + d1, n1, base2 + d2, n2)?;
        candidates.push(v);
        let miss = ((v as f64 * pi / modulus as f64).sin().powi(2) - p0).abs();
        if best.is_none_or(|(m, _)| miss < m) {
            best = Some((miss, v));
        }
    }
    let selected = best.map(|(_, v)| v).expect("offset sets are nonempty");
    Ok(CrtContext { max_depth, n1, n2, modulus, l, h, s1, s2, candidates, selected })
}

/// CRT estimate from postselected counts at depths `D` and `D − 1` plus a
/// low-depth MLE estimate. Oracle calls count every consumed depth once.
pub fn crt_estimate(
    at_d: &DepthCounts,
    at_dm1: &DepthCounts,
    low_depth: &Estimate,
    max_depth: usize,
    offsets: OffsetSet,
) -> Result<Estimate, EstimatorError> {
    let p_d = at_d.good_fraction().ok_or(EstimatorError::NoKeptShots)?;
    let p_dm1 = at_dm1.good_fraction().ok_or(EstimatorError::NoKeptShots)?;
    let ctx = crt_reconstruct(p_d, p_dm1, low_depth.theta_hat(), max_depth, offsets)?;
    let mut depths = low_depth.depths().to_vec();
    let mut calls = low_depth.oracle_calls();
    for c in [at_dm1, at_d] {
        if !depths.contains(&c.depth) {
            depths.push(c.depth);
            calls += c.oracle_calls();
        }
    }
    Ok(Estimate::new(ctx.theta(), calls, Algorithm::Crt, depths))
}

/// Threshold inputs of the hybrid selector for one CRT depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridCalibration {
    pub mle_avg_depth2: f64,
    pub crt_exact_at_d: f64,
    pub beta_hybrid: f64,
}

impl HybridCalibration {
    pub fn threshold(&self) -> f64 {
        self.beta_hybrid * (self.mle_avg_depth2 - self.crt_exact_at_d).abs()
    }
}

/// Returns the CRT estimate unless it disagrees with the low-depth MLE by
/// more than the calibrated threshold, in which case the MLE is returned.
/// Cost is that of the CRT estimate, which already includes the MLE shots.
pub fn hybrid_estimate(mle: &Estimate, crt: &Estimate, cal: &HybridCalibration) -> Estimate {
    let gap = (mle.p_hat() - crt.p_hat()).abs();
    let (source, branch) = if gap > cal.threshold() { (mle, Branch::Mle) } else { (crt, Branch::Crt) };
    let mut out = source.clone();
    out.algorithm = Algorithm::Hybrid;
    out.branch = Some(branch);
    out.oracle_calls = crt.oracle_calls();
    out.depths = crt.depths().to_vec();
    out
}
