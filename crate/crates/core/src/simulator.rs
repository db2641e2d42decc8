//! Exact 4-qubit statevector execution, outcome sampling and unary
//! postselection.
//!
//! Basis index convention: qubit `q` is bit `3 - q`, so the string
//! `|1000⟩` (flag qubit set) is index 8.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{rbs_unitary, Circuit, Gate, Matrix4, NUM_QUBITS};

pub const DIM: usize = 1 << NUM_QUBITS;

/// Index of `|1000⟩`.
pub const GOOD_INDEX: usize = 0b1000;

/// Indices of `|0100⟩, |0010⟩, |0001⟩`.
pub const BAD_INDICES: [usize; 3] = [0b0100, 0b0010, 0b0001];

const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("circuit has {0} qubits, simulator supports exactly 4")]
    RegisterSize(usize),
    #[error("invalid outcome distribution: {0}")]
    InvalidDistribution(String),
}

/// How a measured basis state is treated by postselection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Good,
    Bad,
    Discarded,
}

pub fn classify(index: usize) -> Outcome {
    if index == GOOD_INDEX {
        Outcome::Good
    } else if BAD_INDICES.contains(&index) {
        Outcome::Bad
    } else {
        Outcome::Discarded
    }
}

/// Postselected tallies at one circuit depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DepthCounts {
    pub depth: usize,
    pub good: u64,
    pub bad: u64,
    pub discarded: u64,
}

impl DepthCounts {
    pub fn new(depth: usize, good: u64, bad: u64, discarded: u64) -> Self {
        Self { depth, good, bad, discarded }
    }

    pub fn empty(depth: usize) -> Self {
        Self { depth, ..Default::default() }
    }

    /// Shots taken, including discarded ones.
    pub fn total(&self) -> u64 {
        self.good + self.bad + self.discarded
    }

    /// Shots surviving postselection.
    pub fn kept(&self) -> u64 {
        self.good + self.bad
    }

    pub fn good_fraction(&self) -> Option<f64> {
        let kept = self.kept();
        (kept > 0).then(|| self.good as f64 / kept as f64)
    }

    /// Oracle invocations spent on these shots: `2d + 1` per shot.
    pub fn oracle_calls(&self) -> u64 {
        self.total() * (2 * self.depth as u64 + 1)
    }

    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Good => self.good += 1,
            Outcome::Bad => self.bad += 1,
            Outcome::Discarded => self.discarded += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: [Complex64; DIM],
}

impl Default for StateVector {
    fn default() -> Self {
        Self::zero()
    }
}

impl StateVector {
    /// `|0000⟩`.
    pub fn zero() -> Self {
        let mut amplitudes = [Complex64::new(0.0, 0.0); DIM];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> [f64; DIM] {
        self.amplitudes.map(|a| a.norm_sqr())
    }

    /// Probability of the good outcome `|1000⟩`.
    pub fn good_probability(&self) -> f64 {
        self.amplitudes[GOOD_INDEX].norm_sqr()
    }

    pub fn apply(&mut self, gate: &Gate) {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        match *gate {
            Gate::X(q) => self.apply_single(q, [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]),
            Gate::Z(q) => self.apply_single(q, [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]),
            Gate::H(q) => self.apply_single(q, [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]]),
            Gate::Ry(q, angle) => {
                let (s, co) = (angle / 2.0).sin_cos();
                self.apply_single(q, [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
            }
            Gate::Cz(a, b) => {
                let mask = bit(a) | bit(b);
                for amp in self.amplitudes.iter_mut().enumerate().filter(|(i, _)| i & mask == mask) {
                    *amp.1 = -*amp.1;
                }
            }
            Gate::Rbs(a, b, angle) => self.apply_two(a, b, &rbs_unitary(angle)),
        }
    }

    fn apply_single(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let mask = bit(q);
        for i in (0..DIM).filter(|i| i & mask == 0) {
            let j = i | mask;
            let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// `m` is indexed by the local basis `(bit_a << 1) | bit_b`.
    fn apply_two(&mut self, a: usize, b: usize, m: &Matrix4) {
        let (ma, mb) = (bit(a), bit(b));
        for i in (0..DIM).filter(|i| i & (ma | mb) == 0) {
            let idx = [i, i | mb, i | ma, i | ma | mb];
            let v = idx.map(|k| self.amplitudes[k]);
            for (row, &k) in idx.iter().enumerate() {
                self.amplitudes[k] = (0..4).map(|col| m[row][col] * v[col]).sum();
            }
        }
    }
}

fn bit(q: usize) -> usize {
    1 << (NUM_QUBITS - 1 - q)
}

/// Runs `circuit` on `|0000⟩`.
pub fn run_statevector(circuit: &Circuit) -> Result<StateVector, SimError> {
    if circuit.num_qubits() != NUM_QUBITS {
        return Err(SimError::RegisterSize(circuit.num_qubits()));
    }
    let mut state = StateVector::zero();
    for g in circuit.gates() {
        state.apply(g);
    }
    Ok(state)
}

/// `sin²((2t + 1)θ)`.
pub fn analytic_success_prob(theta: f64, depth: usize) -> f64 {
    ((2 * depth + 1) as f64 * theta).sin().powi(2)
}

/// Draws `shots` outcomes from `distribution` and postselects them onto
/// the unary code space.
pub fn sample_and_postselect<R: Rng + ?Sized>(
    distribution: &[f64; DIM],
    depth: usize,
    shots: u64,
    rng: &mut R,
) -> Result<DepthCounts, SimError> {
    if distribution.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(SimError::InvalidDistribution("negative or non-finite entry".into()));
    }
    let total: f64 = distribution.iter().sum();
    if (total - 1.0).abs() > NORM_TOL {
        return Err(SimError::InvalidDistribution(format!("sums to {total}")));
    }
    let mut counts = DepthCounts::empty(depth);
    if shots == 0 {
        return Ok(counts);
    }
    let sampler =
        WeightedIndex::new(distribution.iter().copied()).map_err(|e| SimError::InvalidDistribution(e.to_string()))?;
    for _ in 0..shots {
        counts.record(classify(sampler.sample(rng)));
    }
    Ok(counts)
}
