//! Single-bit-flip Metropolis annealing on the QUBO.
//!
//! Each restart `r` draws from its own ChaCha8 stream: the generator is
//! seeded with the schedule's 64-bit seed and switched to stream `r`. Within a
//! restart, sweeps visit variables in index order and the inverse temperature
//! follows a geometric path from `beta_start` to `beta_end`. Energy changes
//! come from maintained local fields, so a proposal costs O(1) and an
//! accepted flip O(degree). `exp` and `pow` come from `libm` so that runs are
//! bit-identical across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{SolveResult, SolveStats, SolverError};
use crate::qubo::{BitVector, IntegerQubo, QuboModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub beta_start: f64,
    pub beta_end: f64,
    pub sweeps: u64,
    pub restarts: u32,
    pub seed: u64,
}

impl AnnealSchedule {
    pub fn new(
        beta_start: f64,
        beta_end: f64,
        sweeps: u64,
        restarts: u32,
        seed: u64,
    ) -> Result<Self, SolverError> {
        let s = Self {
            beta_start,
            beta_end,
            sweeps,
            restarts,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    /// Default schedule for a model: `1000 * ceil(log2(n + 1))` sweeps and 8
    /// restarts, with the inverse-temperature range read off the
    /// coefficients (see [`beta_range`]).
    pub fn default_for(q: &QuboModel, seed: u64) -> Result<Self, SolverError> {
        let (beta_start, beta_end) = beta_range(&q.integer_form()?);
        Ok(Self {
            beta_start,
            beta_end,
            sweeps: default_sweeps(q.num_vars()),
            restarts: 8,
            seed,
        })
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let err = |m: &str| Err(SolverError::Schedule(m.to_string()));
        if !(self.beta_start.is_finite() && self.beta_start > 0.0) {
            return err("beta_start must be positive and finite");
        }
        if !(self.beta_end.is_finite() && self.beta_end > 0.0) {
            return err("beta_end must be positive and finite");
        }
        if self.beta_start > self.beta_end {
            return err("beta_start must not exceed beta_end");
        }
        if self.sweeps == 0 {
            return err("sweeps must be at least 1");
        }
        if self.restarts == 0 {
            return err("restarts must be at least 1");
        }
        Ok(())
    }

    /// Inverse temperature for sweep `s` (0-based).
    pub fn beta_at(&self, s: u64) -> f64 {
        if self.sweeps == 1 {
            return self.beta_start;
        }
        let t = s as f64 / (self.sweeps - 1) as f64;
        self.beta_start * libm::pow(self.beta_end / self.beta_start, t)
    }
}

pub fn default_sweeps(num_vars: usize) -> u64 {
    let bits = (num_vars as u64 + 1).next_power_of_two().trailing_zeros() as u64;
    1000 * bits.max(1)
}

/// Range used when the model has no nonzero coefficient.
pub const FALLBACK_BETA_RANGE: (f64, f64) = (0.05, 5.0);

/// Hot end: the largest possible single-flip change is accepted with
/// probability 1/2. Cold end: the smallest nonzero coefficient, as an uphill
/// step, is accepted with probability 1/100.
pub fn beta_range(iq: &IntegerQubo) -> (f64, f64) {
    let mut reach: Vec<i64> = iq.linear.iter().map(|c| c.abs()).collect();
    let mut smallest = i64::MAX;
    for &c in iq.linear.iter().filter(|&&c| c != 0) {
        smallest = smallest.min(c.abs());
    }
    for &(a, b, c) in &iq.quadratic {
        reach[a] += c.abs();
        reach[b] += c.abs();
        smallest = smallest.min(c.abs());
    }
    let largest = reach.into_iter().max().unwrap_or(0);
    if largest == 0 {
        return FALLBACK_BETA_RANGE;
    }
    let scale = iq.scale as f64;
    let hot = std::f64::consts::LN_2 * scale / largest as f64;
    let cold = 100f64.ln() * scale / smallest as f64;
    (hot, cold.max(hot))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnnealOptions {
    /// Repair an infeasible result with the per-pixel data-cost policy.
    pub repair: bool,
    /// Run restarts on the rayon pool. Results do not depend on this.
    pub parallel: bool,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        Self {
            repair: false,
            parallel: true,
        }
    }
}

struct Restart {
    energy: i64,
    bits: Vec<bool>,
    best_sweep: u64,
    proposals: u64,
}

/// Above this exponent the acceptance probability is below the 2^-53
/// resolution of the uniform draw.
const MAX_EXPONENT: f64 = 40.0;

fn run_restart(
    iq: &IntegerQubo,
    adj: &[Vec<(usize, i64)>],
    sched: &AnnealSchedule,
    restart: u32,
) -> Restart {
    let mut rng = ChaCha8Rng::seed_from_u64(sched.seed);
    rng.set_stream(u64::from(restart));
    let n = iq.num_vars();
    let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut field = iq.linear.clone();
    for a in 0..n {
        if x[a] {
            for &(b, c) in &adj[a] {
                field[b] += c;
            }
        }
    }
    let mut energy = iq.evaluate(&x);
    let mut best = Restart {
        energy,
        bits: x.clone(),
        best_sweep: 0,
        proposals: 0,
    };
    let inv_scale = 1.0 / iq.scale as f64;

    for s in 0..sched.sweeps {
        let beta = sched.beta_at(s) * inv_scale;
        for a in 0..n {
            let delta = if x[a] { -field[a] } else { field[a] };
            let accept = delta <= 0 || {
                let exponent = beta * delta as f64;
                exponent < MAX_EXPONENT && rng.random::<f64>() < libm::exp(-exponent)
            };
            if accept {
                x[a] = !x[a];
                energy += delta;
                let sign = if x[a] { 1 } else { -1 };
                for &(b, c) in &adj[a] {
                    field[b] += sign * c;
                }
            }
        }
        if energy < best.energy {
            best.energy = energy;
            best.bits.copy_from_slice(&x);
            best.best_sweep = s + 1;
        }
    }
    best.proposals = sched.sweeps * n as u64;
    best
}

/// Anneals with default options: restarts in parallel, no repair.
pub fn simulated_anneal(q: &QuboModel, sched: &AnnealSchedule) -> Result<SolveResult, SolverError> {
    simulated_anneal_with(q, sched, AnnealOptions::default())
}

pub fn simulated_anneal_with(
    q: &QuboModel,
    sched: &AnnealSchedule,
    opts: AnnealOptions,
) -> Result<SolveResult, SolverError> {
    sched.validate()?;
    let iq = q.integer_form()?;
    let adj = iq.adjacency();
    let run = |r: u32| run_restart(&iq, &adj, sched, r);
    let outcomes: Vec<Restart> = if opts.parallel {
        (0..sched.restarts).into_par_iter().map(run).collect()
    } else {
        (0..sched.restarts).map(run).collect()
    };
    let proposals = outcomes.iter().map(|o| o.proposals).sum();
    // lowest energy, then lowest restart index
    let best = outcomes
        .into_iter()
        .enumerate()
        .min_by_key(|(r, o)| (o.energy, *r))
        .map(|(_, o)| o)
        .expect("at least one restart");

    let mut stats = SolveStats {
        seed: Some(sched.seed),
        restarts: sched.restarts,
        sweeps: sched.sweeps,
        best_sweep: best.best_sweep,
        proposals,
        beta_start: Some(sched.beta_start),
        beta_end: Some(sched.beta_end),
        repaired: false,
    };
    let mut bits = BitVector::new(best.bits);
    let mut energy = iq.to_rational(best.energy);
    let mut feasible = q.is_feasible(&bits)?;
    if !feasible && opts.repair {
        bits = repair(q, &bits)?;
        energy = q.evaluate(&bits)?;
        feasible = true;
        stats.repaired = true;
    }
    let labeling = if feasible { Some(q.decode(&bits)?) } else { None };
    Ok(SolveResult {
        solver: "sa".to_string(),
        labeling,
        bits: Some(bits),
        energy,
        feasible,
        problem_key: q.problem_key().to_string(),
        stats,
    })
}

/// Makes every pixel one-hot: an empty group takes its cheapest label, a
/// group with several bits keeps the cheapest of those (ties to the smaller
/// disparity). Data costs are read back from the linear coefficients.
pub fn repair(q: &QuboModel, x: &BitVector) -> Result<BitVector, SolverError> {
    q.is_feasible(x)?;
    let k = q.index().k();
    let mut out = BitVector::zeros(q.num_vars());
    for (r, group) in x.bits().chunks(k).enumerate() {
        let base = r * k;
        let set: Vec<usize> = (0..k).filter(|&o| group[o]).collect();
        let candidates: Vec<usize> = if set.is_empty() { (0..k).collect() } else { set };
        let pick = candidates
            .into_iter()
            .min_by_key(|&o| (q.data_cost(base + o), o))
            .expect("k >= 1");
        out.set(base + pick, true);
    }
    Ok(out)
}
