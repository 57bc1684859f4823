//! Minimizers for the stereo energy and its QUBO.

mod anneal;
mod brute;
mod icm;

pub use anneal::{repair, simulated_anneal, simulated_anneal_with, AnnealOptions, AnnealSchedule};
pub use brute::{
    brute_force_binary, brute_force_binary_with, brute_force_labelings,
    brute_force_labelings_with, BinaryOptimum, LabelingOptimum, BINARY_CAP, LABELING_CAP,
};
pub use icm::{icm, icm_trace, wta};

use serde::Serialize;
use thiserror::Error;

use crate::energy::{Labeling, ProblemError};
use crate::qubo::{BitVector, QuboError};
use crate::rational::Rational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("search space of {states} states exceeds the cap of {cap}")]
    TooLarge { states: u128, cap: u128 },
    #[error("invalid annealing schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
}

/// Bookkeeping that makes a run reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub seed: Option<u64>,
    pub restarts: u32,
    /// Sweeps per restart (annealing) or passes (ICM).
    pub sweeps: u64,
    /// Sweep at which the returned state was first reached; 0 means the
    /// initial state.
    pub best_sweep: u64,
    /// Total single-bit-flip proposals.
    pub proposals: u64,
    pub beta_start: Option<f64>,
    pub beta_end: Option<f64>,
    /// Set when an infeasible annealing result was repaired.
    pub repaired: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solver: String,
    pub labeling: Option<Labeling>,
    pub bits: Option<BitVector>,
    pub energy: Rational,
    pub feasible: bool,
    /// Fingerprint of the problem the result was computed on.
    pub problem_key: String,
    pub stats: SolveStats,
}
