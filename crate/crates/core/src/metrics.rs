//! Disparity accuracy, solver energy reports and encoding size comparison.

use serde::Serialize;
use thiserror::Error;

use crate::imaging::DispMatrix;
use crate::rational::{exact_string, to_f64};
use crate::solvers::SolveResult;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("disparity map is {map:?} but ground truth is {truth:?}")]
    DimensionMismatch {
        map: (usize, usize),
        truth: (usize, usize),
    },
    #[error("beta must be positive")]
    BadBeta,
    #[error("results come from different problems ({first} vs {other})")]
    MixedProblems { first: String, other: String },
}

fn check_dims(d: &DispMatrix, t: &DispMatrix) -> Result<(), MetricsError> {
    let (a, b) = ((d.width(), d.height()), (t.width(), t.height()));
    if a != b {
        return Err(MetricsError::DimensionMismatch { map: a, truth: b });
    }
    Ok(())
}

/// Root-mean-squared disparity error over all cells.
pub fn rms(d: &DispMatrix, t: &DispMatrix) -> Result<f64, MetricsError> {
    check_dims(d, t)?;
    let sum: f64 = d
        .values()
        .iter()
        .zip(t.values())
        .map(|(&a, &b)| {
            let e = (a - b) as f64;
            e * e
        })
        .sum();
    Ok((sum / d.values().len() as f64).sqrt())
}

/// Percentage of cells whose absolute error is strictly greater than `beta`.
pub fn bad_beta(d: &DispMatrix, t: &DispMatrix, beta: f64) -> Result<f64, MetricsError> {
    check_dims(d, t)?;
    if !(beta > 0.0) {
        return Err(MetricsError::BadBeta);
    }
    let bad = d
        .values()
        .iter()
        .zip(t.values())
        .filter(|(&a, &b)| (a - b).unsigned_abs() as f64 > beta)
        .count();
    Ok(100.0 * bad as f64 / d.values().len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityInputs {
    /// Image height.
    pub n: u64,
    /// Image width.
    pub m: u64,
    /// Number of disparity labels.
    pub k: u64,
}

/// Qubit counts of four stereo QUBO formulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QubitCounts {
    pub cruz: u128,
    pub heidari2021: u128,
    pub heidari2022: u128,
    pub ours: u128,
}

impl QubitCounts {
    pub fn rows(&self) -> [(&'static str, u128); 4] {
        [
            ("cruz", self.cruz),
            ("heidari2021", self.heidari2021),
            ("heidari2022", self.heidari2022),
            ("ours", self.ours),
        ]
    }
}

pub fn qubit_counts(c: ComplexityInputs) -> QubitCounts {
    let (n, m, k) = (i128::from(c.n), i128::from(c.m), i128::from(c.k));
    let nm = n * m;
    let cruz = 7 * nm * k + 9 * nm - 2 * n * k - 2 * m * k - 2 * n - 2 * m + 2;
    let u = |v: i128| u128::try_from(v).expect("non-negative for positive inputs");
    QubitCounts {
        cruz: u(cruz),
        heidari2021: u(nm * k + nm + 2),
        heidari2022: u(nm * k + k * k),
        ours: u(nm * k),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub solver: String,
    pub energy: f64,
    /// Exact value as `n` or `n/d`.
    pub energy_exact: String,
    pub feasible: bool,
    pub seed: Option<u64>,
    pub sweeps: u64,
    pub restarts: u32,
    pub best_sweep: u64,
    pub proposals: u64,
    pub repaired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub problem_key: String,
    pub rows: Vec<ReportRow>,
}

/// Tabulates results on one problem, lowest energy first (stable for ties).
pub fn energy_report(results: &[(String, SolveResult)]) -> Result<EnergyReport, MetricsError> {
    let key = results
        .first()
        .map(|(_, r)| r.problem_key.clone())
        .unwrap_or_default();
    if let Some((_, other)) = results.iter().find(|(_, r)| r.problem_key != key) {
        return Err(MetricsError::MixedProblems {
            first: key,
            other: other.problem_key.clone(),
        });
    }
    let mut sorted: Vec<&(String, SolveResult)> = results.iter().collect();
    sorted.sort_by_key(|r| r.1.energy);
    let rows = sorted
        .into_iter()
        .map(|(name, r)| ReportRow {
            solver: name.clone(),
            energy: to_f64(&r.energy),
            energy_exact: exact_string(&r.energy),
            feasible: r.feasible,
            seed: r.stats.seed,
            sweeps: r.stats.sweeps,
            restarts: r.stats.restarts,
            best_sweep: r.stats.best_sweep,
            proposals: r.stats.proposals,
            repaired: r.stats.repaired,
        })
        .collect();
    Ok(EnergyReport {
        problem_key: key,
        rows,
    })
}

impl EnergyReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<10} {:>14} {:>9} {:>20} {:>8} {:>8}\n",
            "solver", "energy", "feasible", "seed", "sweeps", "restarts"
        );
        for r in &self.rows {
            let seed = r.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
            out.push_str(&format!(
                "{:<10} {:>14} {:>9} {:>20} {:>8} {:>8}\n",
                r.solver, r.energy_exact, r.feasible, seed, r.sweeps, r.restarts
            ));
        }
        out
    }
}

/// Accuracy of one disparity map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub pixels: usize,
    pub rms: f64,
    /// `(beta, percentage)`, percentage unrounded.
    pub bad: Vec<(f64, f64)>,
}

pub fn accuracy(
    d: &DispMatrix,
    t: &DispMatrix,
    betas: &[f64],
) -> Result<AccuracyReport, MetricsError> {
    Ok(AccuracyReport {
        pixels: d.values().len(),
        rms: rms(d, t)?,
        bad: betas
            .iter()
            .map(|&b| Ok((b, bad_beta(d, t, b)?)))
            .collect::<Result<_, MetricsError>>()?,
    })
}

impl AccuracyReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("pixels {}\nrms {:.4}\n", self.pixels, self.rms);
        for (b, v) in &self.bad {
            out.push_str(&format!("bad-{b:?} {v:.2}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }
}
