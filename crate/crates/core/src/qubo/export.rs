//! qbsolv-style text export plus a JSON sidecar carrying everything the
//! text format cannot: the constant offset, penalty and smoothness weights,
//! image geometry and the variable layout.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{QuboError, QuboModel, VarIndex};
use crate::energy::DisparityRange;
use crate::rational::{exact_string, format_rational, parse_rational, Rational};

pub const SIDECAR_FORMAT: &str = "stereo-qubo-sidecar/1";
pub const ENUMERATION_ORDER: &str =
    "pixels row-major over columns d_max..width-1; flat = rank * k + (d - d_min)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub num_vars: usize,
    pub alpha: String,
    pub lambda: String,
    pub offset: String,
    pub width: usize,
    pub height: usize,
    pub d_min: u32,
    pub d_max: u32,
    pub enumeration: String,
    pub problem_key: String,
    /// `variables[a] = [i, j, d]`
    pub variables: Vec<[u64; 3]>,
}

/// The two exported documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuboText {
    pub qubo: String,
    pub sidecar: String,
}

pub fn export_qubo(q: &QuboModel) -> QuboText {
    let mut out = format!(
        "p qubo 0 {} {} {}\n",
        q.num_vars(),
        q.linear.len(),
        q.quadratic.len()
    );
    for (a, c) in &q.linear {
        out.push_str(&format!("{a} {a} {}\n", format_rational(c)));
    }
    for ((a, b), c) in &q.quadratic {
        out.push_str(&format!("{a} {b} {}\n", format_rational(c)));
    }

    let idx = q.index;
    let variables = (0..q.num_vars())
        .map(|a| {
            let ((i, j), d) = idx.triple(a).expect("in range");
            [i as u64, j as u64, u64::from(d)]
        })
        .collect();
    let sidecar = Sidecar {
        format: SIDECAR_FORMAT.to_string(),
        num_vars: q.num_vars(),
        alpha: exact_string(&q.alpha),
        lambda: exact_string(&q.lambda),
        offset: exact_string(&q.offset),
        width: idx.width(),
        height: idx.height(),
        d_min: idx.range().d_min(),
        d_max: idx.range().d_max(),
        enumeration: ENUMERATION_ORDER.to_string(),
        problem_key: q.problem_key.clone(),
        variables,
    };
    let mut sidecar = serde_json::to_string_pretty(&sidecar).expect("plain data serializes");
    sidecar.push('\n');
    QuboText { qubo: out, sidecar }
}

fn format_err(line: usize, reason: impl Into<String>) -> QuboError {
    QuboError::Format {
        line,
        reason: reason.into(),
    }
}

/// Reads an exported model back. Coefficients printed as decimals are taken
/// at their printed value.
pub fn import_qubo(qubo: &str, sidecar: &str) -> Result<QuboModel, QuboError> {
    let meta: Sidecar =
        serde_json::from_str(sidecar).map_err(|e| QuboError::Sidecar(e.to_string()))?;
    if meta.format != SIDECAR_FORMAT {
        return Err(QuboError::Sidecar(format!("unknown format {:?}", meta.format)));
    }
    let range = DisparityRange::new(meta.d_min, meta.d_max)
        .map_err(|e| QuboError::Sidecar(e.to_string()))?;
    let index = VarIndex::new(meta.width, meta.height, range);
    if index.num_vars() != meta.num_vars || meta.variables.len() != meta.num_vars {
        return Err(QuboError::Sidecar(format!(
            "geometry implies {} variables, sidecar declares {}",
            index.num_vars(),
            meta.num_vars
        )));
    }
    for (a, &[i, j, d]) in meta.variables.iter().enumerate() {
        if index.flat((i as usize, j as usize), d as u32) != Some(a) {
            return Err(QuboError::Sidecar(format!(
                "variable {a} maps to ({i},{j},{d}), inconsistent with the enumeration order"
            )));
        }
    }
    let rat = |s: &str| parse_rational(s).map_err(QuboError::Sidecar);

    let mut linear = BTreeMap::new();
    let mut quadratic = BTreeMap::new();
    let mut header: Option<(usize, usize, usize)> = None;
    for (n, raw) in qubo.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "p" {
            if header.is_some() {
                return Err(format_err(line_no, "duplicate problem line"));
            }
            match fields.as_slice() {
                ["p", "qubo", _topology, nv, nl, nq] => {
                    let num = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|_| format_err(line_no, format!("bad count {s:?}")))
                    };
                    header = Some((num(nv)?, num(nl)?, num(nq)?));
                }
                _ => return Err(format_err(line_no, "expected `p qubo 0 <vars> <diag> <couplers>`")),
            }
            continue;
        }
        let Some((nv, _, _)) = header else {
            return Err(format_err(line_no, "coefficient before problem line"));
        };
        let [a, b, c] = fields.as_slice() else {
            return Err(format_err(line_no, "expected `<a> <b> <coefficient>`"));
        };
        let var = |s: &str| match s.parse::<usize>() {
            Ok(v) if v < nv => Ok(v),
            _ => Err(format_err(line_no, format!("bad variable index {s:?}"))),
        };
        let (a, b) = (var(a)?, var(b)?);
        let c = parse_rational(c).map_err(|e| format_err(line_no, e))?;
        if a == b {
            *linear.entry(a).or_insert_with(Rational::zero) += c;
        } else {
            *quadratic
                .entry((a.min(b), a.max(b)))
                .or_insert_with(Rational::zero) += c;
        }
    }
    let Some((nv, nl, nq)) = header else {
        return Err(format_err(0, "missing problem line"));
    };
    if nv != meta.num_vars {
        return Err(QuboError::Sidecar(format!(
            "qubo declares {nv} variables, sidecar {}",
            meta.num_vars
        )));
    }
    if linear.len() != nl || quadratic.len() != nq {
        return Err(format_err(
            0,
            format!(
                "header declares {nl} diagonal and {nq} coupler terms, found {} and {}",
                linear.len(),
                quadratic.len()
            ),
        ));
    }
    linear.retain(|_, v: &mut Rational| !v.is_zero());
    quadratic.retain(|_, v: &mut Rational| !v.is_zero());

    Ok(QuboModel {
        index,
        linear,
        quadratic,
        offset: rat(&meta.offset)?,
        alpha: rat(&meta.alpha)?,
        lambda: rat(&meta.lambda)?,
        problem_key: meta.problem_key,
    })
}
