//! Stereo matching as a QUBO.
//!
//! The crate builds the global stereo energy (SAD data term plus Potts
//! smoothness over a 4-neighborhood) from a rectified grayscale pair, compiles
//! it into an equivalent one-hot QUBO, and minimizes either form with
//! exhaustive search, simulated annealing, ICM or winner-take-all.

pub mod cli;
pub mod energy;
pub mod fixtures;
pub mod imaging;
pub mod metrics;
pub mod qubo;
pub mod rational;
pub mod solvers;
pub mod verify;

pub use energy::{build_problem, total_energy, DisparityRange, Labeling, StereoProblem};
pub use imaging::{read_pgm, write_pgm, CropRect, DispMatrix, GrayImage};
pub use qubo::{build_qubo, BitVector, PenaltyCheck, QuboModel};
pub use rational::Rational;
