//! Exhaustive checks of the QUBO/energy correspondence on tiny instances.

use serde::Serialize;

use crate::energy::{total_energy, Labeling, StereoProblem};
use crate::qubo::{alpha_bound, build_qubo, default_alpha, BitVector, PenaltyCheck};
use crate::rational::{exact_string, Rational};
use crate::solvers::{brute_force_binary, brute_force_labelings, SolverError};

/// Largest model enumerated bit vector by bit vector.
pub const MAX_VERIFY_VARS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub num_vars: usize,
    pub alpha: String,
    pub min_energy: String,
    pub checks: Vec<PropertyCheck>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "variables {}  alpha {}  min energy {}\n",
            self.num_vars, self.alpha, self.min_energy
        );
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {:<16} {}\n", c.name, c.detail));
        }
        out
    }
}

fn labeling_of(code: u64, n: usize, k: u64, d_min: u32) -> Labeling {
    let mut c = code;
    let mut v = vec![0u32; n];
    for slot in v.iter_mut().rev() {
        *slot = d_min + (c % k) as u32;
        c /= k;
    }
    Labeling::new(v)
}

/// Runs the correspondence suite with `alpha = bound + 1`:
///
/// * `lemma1`: every feasible vector evaluates to the energy of its labeling;
/// * `lemma2`: every global QUBO minimizer is feasible;
/// * `theorem1`: the QUBO minimum equals the energy minimum and decoded
///   minimizers minimize the energy;
/// * `infeasible-gap`: every infeasible vector costs more than the bound,
///   which no feasible vector exceeds.
pub fn verify_instance(p: &StereoProblem) -> Result<VerifyReport, SolverError> {
    let alpha = default_alpha(p);
    let q = build_qubo(p, alpha, PenaltyCheck::Strict)?;
    let n = q.num_vars();
    if n > MAX_VERIFY_VARS {
        return Err(SolverError::TooLarge {
            states: 1u128 << n.min(127),
            cap: 1u128 << MAX_VERIFY_VARS,
        });
    }
    let bound = alpha_bound(p);
    let mut checks = Vec::new();

    // Lemma 1 over every labeling
    let k = p.num_labels() as u64;
    let total = k.pow(p.num_pixels() as u32);
    let mut mismatches = 0u64;
    let mut max_feasible = Rational::from_integer(i64::MIN);
    for code in 0..total {
        let w = labeling_of(code, p.num_pixels(), k, p.range().d_min());
        let x = q.encode(&w)?;
        let h = q.evaluate(&x)?;
        if h != total_energy(p, &w)? || q.decode(&x)? != w {
            mismatches += 1;
        }
        max_feasible = max_feasible.max(h);
    }
    checks.push(PropertyCheck {
        name: "lemma1",
        passed: mismatches == 0,
        detail: format!("{total} feasible vectors, {mismatches} mismatches"),
    });

    let bin = brute_force_binary(&q)?;
    let lab = brute_force_labelings(p)?;
    let infeasible_minimizers = bin
        .minimizers
        .iter()
        .filter(|x| !q.is_feasible(x).unwrap_or(false))
        .count();
    checks.push(PropertyCheck {
        name: "lemma2",
        passed: infeasible_minimizers == 0,
        detail: format!(
            "{} minimizers, {infeasible_minimizers} infeasible",
            bin.minimizers.len()
        ),
    });

    let decoded_ok = bin
        .minimizers
        .iter()
        .filter_map(|x| q.decode(x).ok())
        .all(|w| lab.minimizers.contains(&w));
    checks.push(PropertyCheck {
        name: "theorem1",
        passed: decoded_ok && bin.min_energy == lab.min_energy && infeasible_minimizers == 0,
        detail: format!(
            "min H {} vs min F {}",
            exact_string(&bin.min_energy),
            exact_string(&lab.min_energy)
        ),
    });

    let iq = q.integer_form()?;
    let mut min_infeasible: Option<i64> = None;
    let mut x = BitVector::zeros(n);
    for code in 0u64..(1 << n) {
        for a in 0..n {
            x.set(a, code >> a & 1 == 1);
        }
        if !q.is_feasible(&x)? {
            let h = iq.evaluate(x.bits());
            min_infeasible = Some(min_infeasible.map_or(h, |m| m.min(h)));
        }
    }
    let min_infeasible = min_infeasible.map(|h| iq.to_rational(h));
    let gap_ok = min_infeasible.is_none_or(|h| h > bound) && max_feasible <= bound;
    checks.push(PropertyCheck {
        name: "infeasible-gap",
        passed: gap_ok,
        detail: format!(
            "min infeasible H {} > bound {} >= max feasible H {}",
            min_infeasible.map_or_else(|| "-".into(), |h| exact_string(&h)),
            exact_string(&bound),
            exact_string(&max_feasible)
        ),
    });

    Ok(VerifyReport {
        num_vars: n,
        alpha: exact_string(&alpha),
        min_energy: exact_string(&lab.min_energy),
        checks,
    })
}
