//! Exhaustive minimization, used as the ground-truth oracle.
//!
//! Both searches split their state space into contiguous chunks; the
//! parallel variants evaluate chunks concurrently and merge them in order, so
//! their output is identical to the sequential one.

use rayon::prelude::*;

use super::SolverError;
use crate::energy::{Labeling, StereoProblem};
use crate::qubo::{BitVector, IntegerQubo, QuboModel};
use crate::rational::Rational;

pub const LABELING_CAP: u128 = 1 << 20;
pub const BINARY_CAP: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelingOptimum {
    pub min_energy: Rational,
    /// Every minimizer, in lexicographic order (first pixel most significant).
    pub minimizers: Vec<Labeling>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryOptimum {
    pub min_energy: Rational,
    /// Every minimizer, ascending by integer code with variable 0 as the
    /// least significant bit.
    pub minimizers: Vec<BitVector>,
}

struct Best<T> {
    energy: i64,
    states: Vec<T>,
}

impl<T> Best<T> {
    fn empty() -> Self {
        Self {
            energy: i64::MAX,
            states: Vec::new(),
        }
    }

    fn offer(&mut self, energy: i64, state: impl FnOnce() -> T) {
        if energy < self.energy {
            self.energy = energy;
            self.states.clear();
            self.states.push(state());
        } else if energy == self.energy {
            self.states.push(state());
        }
    }

    fn merge(chunks: Vec<Best<T>>) -> Best<T> {
        let energy = chunks.iter().map(|c| c.energy).min().unwrap_or(i64::MAX);
        let states = chunks
            .into_iter()
            .filter(|c| c.energy == energy)
            .flat_map(|c| c.states)
            .collect();
        Best { energy, states }
    }
}

fn chunk_bounds(total: u128, parallel: bool) -> Vec<(u128, u128)> {
    let pieces: u128 = if parallel {
        (rayon::current_num_threads() as u128 * 4).clamp(1, total.max(1))
    } else {
        1
    };
    let step = total.div_ceil(pieces).max(1);
    (0..pieces)
        .map(|c| (c * step, ((c + 1) * step).min(total)))
        .filter(|(a, b)| a < b)
        .collect()
}

/// Exact minimum of the stereo energy over all `k^|P|` labelings.
pub fn brute_force_labelings(p: &StereoProblem) -> Result<LabelingOptimum, SolverError> {
    brute_force_labelings_with(p, LABELING_CAP, false)
}

pub fn brute_force_labelings_with(
    p: &StereoProblem,
    cap: u128,
    parallel: bool,
) -> Result<LabelingOptimum, SolverError> {
    let n = p.num_pixels();
    let k = p.num_labels() as u128;
    let total = (0..n).try_fold(1u128, |acc, _| acc.checked_mul(k));
    let total = match total {
        Some(t) if t <= cap => t,
        Some(t) => return Err(SolverError::TooLarge { states: t, cap }),
        None => return Err(SolverError::TooLarge { states: u128::MAX, cap }),
    };

    let lambda = p.lambda();
    let (num, den) = (*lambda.numer(), *lambda.denom());
    let d_min = p.range().d_min();
    let kk = p.num_labels();

    let scan = |(start, end): (u128, u128)| -> Best<Vec<u32>> {
        let mut best = Best::empty();
        // digits[r] = label offset of pixel r; pixel 0 most significant
        let mut digits = vec![0usize; n];
        let mut c = start;
        for r in (0..n).rev() {
            digits[r] = (c % k) as usize;
            c /= k;
        }
        for _ in start..end {
            let data: i64 = digits
                .iter()
                .enumerate()
                .map(|(r, &o)| i64::from(p.cost(r, o)))
                .sum();
            let dis = p
                .neighbors()
                .iter()
                .filter(|&&(a, b)| digits[a] != digits[b])
                .count() as i64;
            let e = data * den + num * dis;
            best.offer(e, || digits.iter().map(|&o| d_min + o as u32).collect());
            for r in (0..n).rev() {
                digits[r] += 1;
                if digits[r] < kk {
                    break;
                }
                digits[r] = 0;
            }
        }
        best
    };

    let bounds = chunk_bounds(total, parallel);
    let chunks: Vec<_> = if parallel {
        bounds.into_par_iter().map(scan).collect()
    } else {
        bounds.into_iter().map(scan).collect()
    };
    let best = Best::merge(chunks);
    Ok(LabelingOptimum {
        min_energy: Rational::new(best.energy, den),
        minimizers: best.states.into_iter().map(Labeling::new).collect(),
    })
}

/// Exact minimum of `H` over all `2^n` bit vectors, feasible or not.
pub fn brute_force_binary(q: &QuboModel) -> Result<BinaryOptimum, SolverError> {
    brute_force_binary_with(q, BINARY_CAP, false)
}

pub fn brute_force_binary_with(
    q: &QuboModel,
    cap: u128,
    parallel: bool,
) -> Result<BinaryOptimum, SolverError> {
    let n = q.num_vars();
    let total = 1u128.checked_shl(n as u32).filter(|_| n < 128);
    let total = match total {
        Some(t) if t <= cap => t,
        Some(t) => return Err(SolverError::TooLarge { states: t, cap }),
        None => return Err(SolverError::TooLarge { states: u128::MAX, cap }),
    };
    let iq = q.integer_form()?;
    let adj = iq.adjacency();

    // Chunks fix the high bits; the low bits are walked in Gray-code order.
    let high = if parallel {
        let want = (rayon::current_num_threads() * 4).next_power_of_two().trailing_zeros() as usize;
        want.min(n)
    } else {
        0
    };
    let low = n - high;
    let scan = |prefix: u64| -> Best<u64> { gray_scan(&iq, &adj, prefix << low, low) };
    let prefixes: Vec<u64> = (0..1u64 << high).collect();
    let chunks: Vec<_> = if parallel {
        prefixes.into_par_iter().map(scan).collect()
    } else {
        prefixes.into_iter().map(scan).collect()
    };
    debug_assert_eq!(chunks.len() as u128 * (1u128 << low), total);
    let mut best = Best::merge(chunks);
    best.states.sort_unstable();
    let minimizers = best
        .states
        .into_iter()
        .map(|code| BitVector::new((0..n).map(|a| code >> a & 1 == 1).collect()))
        .collect();
    Ok(BinaryOptimum {
        min_energy: iq.to_rational(best.energy),
        minimizers,
    })
}

fn gray_scan(iq: &IntegerQubo, adj: &[Vec<(usize, i64)>], base: u64, low: usize) -> Best<u64> {
    let n = iq.num_vars();
    let mut x: Vec<bool> = (0..n).map(|a| base >> a & 1 == 1).collect();
    let mut field: Vec<i64> = iq.linear.clone();
    for a in 0..n {
        if x[a] {
            for &(b, c) in &adj[a] {
                field[b] += c;
            }
        }
    }
    let mut energy = iq.evaluate(&x);
    let mut code = base;
    let mut best = Best::empty();
    best.offer(energy, || code);
    for step in 1..(1u64 << low) {
        let a = step.trailing_zeros() as usize;
        let turning_on = !x[a];
        energy += if turning_on { field[a] } else { -field[a] };
        x[a] = turning_on;
        code ^= 1 << a;
        let sign = if turning_on { 1 } else { -1 };
        for &(b, c) in &adj[a] {
            field[b] += sign * c;
        }
        best.offer(energy, || code);
    }
    best
}
