//! Low-depth quantum amplitude estimation on a simulated 4-qubit unary
//! inner-product oracle.
//!
//! The crate builds the oracle and its amplified iterates as gate lists,
//! simulates them exactly, applies an effective depolarizing noise model
//! to the outcome statistics, and runs four estimators on the resulting
//! shots: linear-schedule maximum likelihood, CRT reconstruction, a hybrid
//! of the two, and a noise-aware power-law schedule. [`harness`] drives
//! full experiments and writes their results to disk.

pub mod circuit;
pub mod estimators;
pub mod harness;
pub mod noise;
pub mod scheduler;
pub mod simulator;

pub use circuit::{Circuit, CompiledStats, Gate, LoaderAngles};
pub use estimators::{Algorithm, Branch, Estimate, HybridCalibration, OffsetSet, PosteriorGrid, Schedule};
pub use noise::{CorrelatedNoise, NoiseModel, ProbabilityPrior};
pub use simulator::{DepthCounts, StateVector};
