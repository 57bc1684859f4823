//! Label-space baselines: winner-take-all and iterated conditional modes.

use super::{SolveResult, SolveStats, SolverError};
use crate::energy::{total_energy, Labeling, StereoProblem};
use crate::rational::Rational;

fn labeling_result(
    p: &StereoProblem,
    solver: &str,
    w: Labeling,
    stats: SolveStats,
) -> Result<SolveResult, SolverError> {
    Ok(SolveResult {
        solver: solver.to_string(),
        energy: total_energy(p, &w)?,
        labeling: Some(w),
        bits: None,
        feasible: true,
        problem_key: p.fingerprint(),
        stats,
    })
}

/// Per-pixel data-cost argmin, ties toward the smaller disparity.
pub fn wta(p: &StereoProblem) -> Result<SolveResult, SolverError> {
    let d_min = p.range().d_min();
    let values = (0..p.num_pixels())
        .map(|r| {
            let costs = p.costs_of(r);
            let best = (0..costs.len()).min_by_key(|&o| (costs[o], o)).unwrap_or(0);
            d_min + best as u32
        })
        .collect();
    labeling_result(p, "wta", Labeling::new(values), SolveStats::default())
}

/// Iterated conditional modes from `init`, scanning pixels in enumeration order.
pub fn icm(p: &StereoProblem, init: &Labeling) -> Result<SolveResult, SolverError> {
    Ok(icm_trace(p, init)?.0)
}

/// Like [`icm`], also returning the energy before the first pass and after
/// each pass.
pub fn icm_trace(
    p: &StereoProblem,
    init: &Labeling,
) -> Result<(SolveResult, Vec<Rational>), SolverError> {
    p.check_labeling(init)?;
    let lambda = p.lambda();
    let (num, den) = (*lambda.numer(), *lambda.denom());
    let d_min = p.range().d_min();
    let k = p.num_labels();

    let mut labels: Vec<usize> = init.values().iter().map(|&d| (d - d_min) as usize).collect();
    let mut trace = vec![total_energy(p, init)?];
    let mut passes = 0u64;
    let mut scratch = vec![0i64; k];
    loop {
        passes += 1;
        let mut changed = false;
        for r in 0..p.num_pixels() {
            // conditional cost of each label given the current neighbors, scaled by den
            for (o, slot) in scratch.iter_mut().enumerate() {
                let dis = p.adjacent(r).iter().filter(|&&q| labels[q] != o).count() as i64;
                *slot = i64::from(p.cost(r, o)) * den + num * dis;
            }
            let best = (0..k).min_by_key(|&o| (scratch[o], o)).expect("k >= 1");
            if scratch[best] < scratch[labels[r]] {
                labels[r] = best;
                changed = true;
            }
        }
        let w = Labeling::new(labels.iter().map(|&o| d_min + o as u32).collect());
        trace.push(total_energy(p, &w)?);
        if !changed {
            let stats = SolveStats {
                sweeps: passes,
                ..SolveStats::default()
            };
            return Ok((labeling_result(p, "icm", w, stats)?, trace));
        }
    }
}
